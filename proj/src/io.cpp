#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ccdispatch/io.hpp"

namespace ccdispatch {

using nlohmann::json;

namespace {

Vector to_vector(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  Index i = 0;
  for (const auto& x : j) v(i++) = x.get<double>();
  return v;
}

json from_vector(const Vector& v) {
  json j = json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

Matrix to_matrix(const json& j) {
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return {};
  const Index cols = static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (static_cast<Index>(j[static_cast<std::size_t>(r)].size()) != cols)
      throw ConfigError("ragged matrix in config");
    for (Index c = 0; c < cols; ++c)
      m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

json from_matrix(const Matrix& m) {
  json j = json::array();
  for (Index r = 0; r < m.rows(); ++r) j.push_back(from_vector(m.row(r).transpose()));
  return j;
}

double field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing config field: ") + key);
  return j.at(key).get<double>();
}

double field_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }

  ConfigFile out;
  auto& cfg = out.microgrid;
  cfg.horizon = static_cast<Index>(field(j, "horizon"));
  cfg.base_load = to_vector(j.at("base_load"));
  cfg.spin_reserve = j.contains("spin_reserve") ? to_vector(j.at("spin_reserve"))
                                                : Vector::Zero(cfg.horizon);
  for (const auto& g : j.value("generators", json::array())) {
    GeneratorParams gp;
    gp.p_min = field(g, "p_min");
    gp.p_max = field(g, "p_max");
    gp.ramp_up = field(g, "ramp_up");
    gp.ramp_dn = field(g, "ramp_dn");
    gp.a = field(g, "a");
    gp.b = field(g, "b");
    gp.p_init = field_or(g, "p_init", 0.5 * (gp.p_min + gp.p_max));
    cfg.generators.push_back(gp);
  }
  for (const auto& l : j.value("loads", json::array())) {
    cfg.loads.push_back({field(l, "d_min"), field(l, "d_max"), field(l, "c"), field(l, "d")});
  }
  for (const auto& s : j.value("storages", json::array())) {
    StorageParams sp;
    sp.b_max = field(s, "b_max");
    sp.b_final_min = field(s, "b_final_min");
    sp.p_b_min = field_or(s, "p_b_min", -10.0);
    sp.p_b_max = field_or(s, "p_b_max", 10.0);
    sp.eta = field_or(s, "eta", 0.9);
    sp.b_init = field_or(s, "b_init", sp.b_final_min);
    if (!s.contains("beta")) throw ConfigError("storage missing beta weights");
    sp.beta = to_vector(s.at("beta"));
    cfg.storages.push_back(sp);
  }
  cfg.validate();

  if (j.contains("wind")) {
    const auto& w = j.at("wind");
    WindSpec ws;
    ws.num_farms = static_cast<Index>(field(w, "farms"));
    const auto& wc = w.at("wecs");
    ws.wecs = {field(wc, "c"),     field(wc, "k"),     field(wc, "v_in"),
               field(wc, "v_rated"), field(wc, "v_out"), field(wc, "w_rated")};
    ws.corr.temporal = to_vector(w.at("temporal_phi"));
    ws.corr.spatial = to_matrix(w.at("spatial_correlation"));
    ws.wecs.validate();
    ws.corr.validate();
    if (ws.corr.num_farms() != ws.num_farms)
      throw ConfigError("wind: correlation size does not match farms");
    out.wind = ws;
  }
  return out;
}

void save_config(const ConfigFile& cfg, const std::filesystem::path& path) {
  json j;
  const auto& mg = cfg.microgrid;
  j["horizon"] = mg.horizon;
  j["base_load"] = from_vector(mg.base_load);
  j["spin_reserve"] = from_vector(mg.spin_reserve);
  j["generators"] = json::array();
  for (const auto& g : mg.generators)
    j["generators"].push_back({{"p_min", g.p_min},
                               {"p_max", g.p_max},
                               {"ramp_up", g.ramp_up},
                               {"ramp_dn", g.ramp_dn},
                               {"a", g.a},
                               {"b", g.b},
                               {"p_init", g.p_init}});
  j["loads"] = json::array();
  for (const auto& l : mg.loads)
    j["loads"].push_back({{"d_min", l.d_min}, {"d_max", l.d_max}, {"c", l.c}, {"d", l.d}});
  j["storages"] = json::array();
  for (const auto& s : mg.storages)
    j["storages"].push_back({{"b_max", s.b_max},
                             {"b_final_min", s.b_final_min},
                             {"p_b_min", s.p_b_min},
                             {"p_b_max", s.p_b_max},
                             {"eta", s.eta},
                             {"b_init", s.b_init},
                             {"beta", from_vector(s.beta)}});
  if (cfg.wind) {
    const auto& w = *cfg.wind;
    j["wind"] = {{"farms", w.num_farms},
                 {"wecs",
                  {{"c", w.wecs.c},
                   {"k", w.wecs.k},
                   {"v_in", w.wecs.v_in},
                   {"v_rated", w.wecs.v_rated},
                   {"v_out", w.wecs.v_out},
                   {"w_rated", w.wecs.w_rated}}},
                 {"temporal_phi", from_vector(w.corr.temporal)},
                 {"spatial_correlation", from_matrix(w.corr.spatial)}};
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path.string());
  out << j.dump(2) << "\n";
}

ConfigFile paper_case() {
  ConfigFile file;
  auto& cfg = file.microgrid;
  cfg.horizon = 8;
  cfg.base_load.resize(8);
  cfg.base_load << 43.35, 43.95, 48.0, 48.825, 46.125, 44.1, 41.625, 38.25;
  cfg.spin_reserve = Vector::Zero(8);

  auto gen = [](double lo, double hi, double ru, double rd, double a, double b) {
    GeneratorParams g{lo, hi, ru, rd, a, b, 0.5 * (lo + hi)};
    return g;
  };
  cfg.generators = {gen(10, 30, 15, 15, 0.006, 0.5), gen(8, 50, 40, 40, 0.003, 0.25),
                    gen(15, 70, 20, 20, 0.004, 0.3)};

  cfg.loads = {{1.5, 8, -4.5e-3, 0.15}, {3.3, 10, -1.1e-3, 0.37}, {2, 15, -1.9e-3, 0.62},
               {5.7, 24, -1.3e-3, 0.44}, {4, 20, -1.4e-3, 0.45},  {9, 35, -2.6e-3, 0.87}};

  for (int jdx = 0; jdx < 3; ++jdx) {
    StorageParams s;
    s.b_max = 30.0;
    s.b_final_min = 5.0;
    s.p_b_min = -10.0;
    s.p_b_max = 10.0;
    s.eta = 0.9;
    s.b_init = 5.0;
    s.beta.resize(8);
    for (Index t = 0; t < 8; ++t) s.beta(t) = jdx == 0 ? 0.05 * double(t + 1) : 0.1;
    cfg.storages.push_back(s);
  }

  WindSpec wind;
  wind.num_farms = 4;
  wind.wecs = {10.0, 2.2, 3.0, 14.0, 26.0, 10.0};
  wind.corr.temporal.resize(4);
  wind.corr.temporal << 0.15, 0.43, 0.67, 0.59;
  wind.corr.spatial.resize(4, 4);
  wind.corr.spatial << 1.0, 0.1432, 0.4388, -0.0455,  //
      0.1432, 1.0, -0.4555, 0.8097,                   //
      0.4388, -0.4555, 1.0, -0.7492,                  //
      -0.0455, 0.8097, -0.7492, 1.0;
  file.wind = wind;
  return file;
}

void save_scenarios(const ScenarioSet& set, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw ConfigError("cannot write scenario file: " + csv_path.string());
  for (Index t = 0; t < set.horizon(); ++t) out << (t ? "," : "") << "t" << (t + 1);
  out << "\n";
  for (Index s = 0; s < set.num_samples(); ++s) {
    for (Index t = 0; t < set.horizon(); ++t)
      out << (t ? "," : "") << format_double(set.samples(s, t));
    out << "\n";
  }
}

void save_scenario_meta(const ScenarioSet& set, const std::filesystem::path& csv_path) {
  json j;
  j["seed"] = set.seed;
  j["num_samples"] = set.num_samples();
  j["horizon"] = set.horizon();
  j["farms"] = set.meta.num_farms;
  j["wecs"] = {{"c", set.meta.wecs.c},         {"k", set.meta.wecs.k},
               {"v_in", set.meta.wecs.v_in},   {"v_rated", set.meta.wecs.v_rated},
               {"v_out", set.meta.wecs.v_out}, {"w_rated", set.meta.wecs.w_rated}};
  if (set.meta.corr.temporal.size() > 0) {
    j["temporal_phi"] = from_vector(set.meta.corr.temporal);
    j["spatial_correlation"] = from_matrix(set.meta.corr.spatial);
  }
  std::ofstream out(csv_path.string() + ".meta.json");
  if (!out) throw ConfigError("cannot write scenario metadata");
  out << j.dump(2) << "\n";
}

ScenarioSet load_scenarios(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open scenario file: " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("scenario file is empty");
  Index horizon = line.empty() ? 0 : 1;
  for (char ch : line) horizon += (ch == ',');

  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Index cols = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::stod(cell));
      ++cols;
    }
    if (cols != horizon) throw ConfigError("scenario file has ragged rows");
    ++rows;
  }
  if (rows == 0) throw ConfigError("scenario file has no samples");

  ScenarioSet set;
  set.samples.resize(rows, horizon);
  for (Index s = 0; s < rows; ++s)
    for (Index t = 0; t < horizon; ++t)
      set.samples(s, t) = values[static_cast<std::size_t>(s * horizon + t)];

  const auto meta_path = csv_path.string() + ".meta.json";
  if (std::ifstream meta_in{meta_path}) {
    json j;
    meta_in >> j;
    set.seed = j.value("seed", std::uint64_t{0});
    set.meta.num_farms = j.value("farms", 0);
    if (j.contains("wecs")) {
      const auto& wc = j.at("wecs");
      set.meta.wecs = {field(wc, "c"),       field(wc, "k"),     field(wc, "v_in"),
                       field(wc, "v_rated"), field(wc, "v_out"), field(wc, "w_rated")};
    }
    if (j.contains("temporal_phi")) {
      set.meta.corr.temporal = to_vector(j.at("temporal_phi"));
      set.meta.corr.spatial = to_matrix(j.at("spatial_correlation"));
    }
  }
  return set;
}

void write_report(const SolveReport& report, const MicrogridConfig& cfg, double p,
                  Index num_samples, std::uint64_t seed,
                  const std::filesystem::path& prefix) {
  {
    std::ofstream out(prefix.string() + ".report.txt");
    if (!out) throw ConfigError("cannot write report: " + prefix.string());
    out << "p " << format_double(p) << "\n";
    out << "num_samples " << num_samples << "\n";
    out << "seed " << seed << "\n";
    out << "horizon " << cfg.horizon << "\n";
    out << "converged " << (report.converged ? 1 : 0) << "\n";
    out << "infeasible " << (report.infeasible ? 1 : 0) << "\n";
    out << "iterations " << report.iterations << "\n";
    out << "f_u " << format_double(report.f_u) << "\n";
    out << "f_rec " << format_double(report.f_rec) << "\n";
    out << "f_saa " << format_double(report.f_saa) << "\n";
    out << "epsilon_optimal " << (report.epsilon_optimal ? 1 : 0) << "\n";
    out << "recovered_column " << report.recovered_column << "\n";
    out << "training_risk " << format_double(report.training_risk) << "\n";
    if (report.fresh_risk) out << "fresh_risk " << format_double(*report.fresh_risk) << "\n";
    out << "active";
    for (std::size_t i = 0; i < report.active.size(); ++i)
      out << " " << report.active[i] << ":"
          << format_double(report.active_weights(static_cast<Index>(i)));
    out << "\n";
    if (!report.infeasible && report.recovered.p_g.size() + report.recovered.p_d.size() > 0) {
      const Vector g = net_load(cfg, report.recovered);
      out << "net_load";
      for (Index t = 0; t < g.size(); ++t) out << " " << format_double(g(t));
      out << "\n";
    }
    if (!report.note.empty()) out << "note " << report.note << "\n";
  }
  {
    std::ofstream out(prefix.string() + ".history.csv");
    out << "iteration,f_u,gap\n";
    for (std::size_t i = 0; i < report.master_history.size(); ++i) {
      out << (i + 1) << "," << format_double(report.master_history[i]) << ",";
      if (i < report.gap_history.size()) out << format_double(report.gap_history[i]);
      out << "\n";
    }
  }
  if (!report.infeasible) {
    std::ofstream out(prefix.string() + ".schedule.csv");
    out << "t,p_g,p_d,p_b,soc,net_load\n";
    const Vector g = net_load(cfg, report.recovered);
    for (Index t = 0; t < cfg.horizon; ++t) {
      const double pg = cfg.num_generators() ? report.recovered.p_g.col(t).sum() : 0.0;
      const double pd = cfg.num_loads() ? report.recovered.p_d.col(t).sum() : 0.0;
      const double pb = cfg.num_storages() ? report.recovered.p_b.col(t).sum() : 0.0;
      const double soc = cfg.num_storages() ? report.recovered.soc.col(t).sum() : 0.0;
      out << (t + 1) << "," << format_double(pg) << "," << format_double(pd) << ","
          << format_double(pb) << "," << format_double(soc) << "," << format_double(g(t))
          << "\n";
    }
  }
}

LoadedReport load_report(const std::filesystem::path& prefix) {
  std::ifstream in(prefix.string() + ".report.txt");
  if (!in) throw ConfigError("cannot open report: " + prefix.string() + ".report.txt");
  LoadedReport out;
  std::string key;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    ss >> key;
    if (key == "p") ss >> out.p;
    else if (key == "f_u") ss >> out.f_u;
    else if (key == "f_rec") ss >> out.f_rec;
    else if (key == "f_saa") ss >> out.f_saa;
    else if (key == "horizon") ss >> out.horizon;
    else if (key == "net_load") {
      std::vector<double> g;
      double x;
      while (ss >> x) g.push_back(x);
      out.net_load.resize(static_cast<Index>(g.size()));
      for (std::size_t i = 0; i < g.size(); ++i) out.net_load(static_cast<Index>(i)) = g[i];
    }
  }
  return out;
}

}  // namespace ccdispatch
