#include "begp/model_io.hpp"

#include <json.hpp>

#include "begp/csv.hpp"
#include "begp/run_config.hpp"

namespace begp {
namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix matrix_from_json(const json& node) {
  const Eigen::Index rows = node.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = node.at("cols").get<Eigen::Index>();
  if (rows < 0 || cols < 0) throw ModelIoError("model: negative matrix shape");
  Matrix m(rows, cols);
  const json& data = node.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows)
    throw ModelIoError("model: matrix row count mismatch");
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = data.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw ModelIoError("model: matrix column count mismatch");
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const json& node) {
  Vector v(static_cast<Eigen::Index>(node.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = node.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

}  // namespace

std::string model_to_json(const BegpModel& model) {
  const BegpModel::State state = model.state();
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["code_version"] = kCodeVersion;
  doc["settings"] = {
      {"latent_dim", state.settings.latent_dim},
      {"latent_samples", state.settings.latent_samples},
      {"mode", state.settings.mode == EmbeddingMode::deterministic
                   ? "deterministic"
                   : "bayesian"},
      {"train",
       {{"iterations", state.settings.train.iterations},
        {"step_size", state.settings.train.step_size},
        {"elbo_samples_per_step", state.settings.train.elbo_samples_per_step},
        {"seed", state.settings.train.seed},
        {"warm_start_iterations",
         state.settings.train.warm_start_iterations}}}};
  doc["table"] = {{"features", state.table.features},
                  {"tokens", state.table.tokens},
                  {"latent_dim", state.table.latent_dim}};
  json means = json::array(), variances = json::array();
  for (const Matrix& m : state.latents.means) means.push_back(matrix_to_json(m));
  for (const Matrix& s : state.latents.variances)
    variances.push_back(matrix_to_json(s));
  doc["latents"] = {{"means", std::move(means)},
                    {"variances", std::move(variances)}};
  doc["gp"] = {{"signal_variance", state.gp.kernel.signal_variance},
               {"lengthscales", vector_to_json(state.gp.kernel.lengthscales)},
               {"mean_constant", state.gp.mean_constant},
               {"noise_variance", state.gp.noise_variance}};
  doc["scaling"] = {{"center", state.scaling.center},
                    {"scale", state.scaling.scale}};
  doc["data"] = {{"feature_names", state.data.feature_names},
                 {"tasks", state.data.tasks},
                 {"x", matrix_to_json(state.data.x)},
                 {"y", vector_to_json(state.data.y)}};
  doc["fitted"] = state.fitted;
  return doc.dump(2) + "\n";
}

BegpModel model_from_json(const std::string& json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) throw ModelIoError("model: invalid JSON");
  try {
    if (doc.at("format_version").get<int>() != kFormatVersion)
      throw ModelIoError("model: unsupported format version");
    BegpModel::State state;
    const json& settings = doc.at("settings");
    state.settings.latent_dim = settings.at("latent_dim").get<int>();
    state.settings.latent_samples = settings.at("latent_samples").get<int>();
    state.settings.mode =
        settings.at("mode").get<std::string>() == "deterministic"
            ? EmbeddingMode::deterministic
            : EmbeddingMode::bayesian;
    const json& train = settings.at("train");
    state.settings.train.iterations = train.at("iterations").get<int>();
    state.settings.train.step_size = train.at("step_size").get<double>();
    state.settings.train.elbo_samples_per_step =
        train.at("elbo_samples_per_step").get<int>();
    state.settings.train.seed = train.at("seed").get<std::uint64_t>();
    state.settings.train.warm_start_iterations =
        train.at("warm_start_iterations").get<int>();

    const json& table = doc.at("table");
    state.table.features =
        table.at("features").get<std::vector<std::string>>();
    state.table.tokens =
        table.at("tokens").get<std::vector<std::vector<std::string>>>();
    state.table.latent_dim = table.at("latent_dim").get<int>();

    const json& latents = doc.at("latents");
    for (const json& m : latents.at("means"))
      state.latents.means.push_back(matrix_from_json(m));
    for (const json& s : latents.at("variances"))
      state.latents.variances.push_back(matrix_from_json(s));

    const json& gp = doc.at("gp");
    state.gp.kernel.signal_variance = gp.at("signal_variance").get<double>();
    state.gp.kernel.lengthscales = vector_from_json(gp.at("lengthscales"));
    state.gp.mean_constant = gp.at("mean_constant").get<double>();
    state.gp.noise_variance = gp.at("noise_variance").get<double>();

    const json& scaling = doc.at("scaling");
    state.scaling.center = scaling.at("center").get<double>();
    state.scaling.scale = scaling.at("scale").get<double>();

    const json& data = doc.at("data");
    state.data.feature_names =
        data.at("feature_names").get<std::vector<std::string>>();
    state.data.tasks = data.at("tasks").get<std::vector<TaskKey>>();
    state.data.x = matrix_from_json(data.at("x"));
    state.data.y = vector_from_json(data.at("y"));

    state.fitted = doc.at("fitted").get<bool>();
    return BegpModel::from_state(std::move(state));
  } catch (const json::exception& e) {
    throw ModelIoError(std::string("model: ") + e.what());
  }
}

void save_model(const BegpModel& model, const std::string& path) {
  write_text_file(path, model_to_json(model));
}

BegpModel load_model(const std::string& path) {
  return model_from_json(read_text_file(path));
}

}  // namespace begp
