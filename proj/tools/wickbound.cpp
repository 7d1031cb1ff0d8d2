// wickbound: batch front end for the bound-verification suites.
//
//   wickbound partition-stats --n-max 6 --out runs/comb
//   wickbound verify-bounds --config configs/verify_sinc.json --out runs/sinc
//   wickbound example-gaussian --out runs/gauss
//   wickbound dnls-demo --config configs/dnls_demo.json --out runs/dnls
//
// Exit status: 0 when every emitted flag is true, 1 when some flag is
// false, 2 when a precondition or input check fails.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wickbound/wickbound.hpp"

#ifndef WICKBOUND_VERSION
#define WICKBOUND_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wickbound;

namespace {

struct Common {
  std::string config_path;
  std::string out = "wickbound-out";
  std::optional<std::uint64_t> seed;
  std::size_t max_order = kDefaultMaxElements;
};

struct Outcome {
  bool ok = true;
  json summary;
  std::vector<std::string> outputs;
};

class Run {
 public:
  Run(std::string subcommand, const Common& common) : subcommand_(std::move(subcommand)), common_(common) {
    if (!common_.config_path.empty()) config_ = load_json(common_.config_path);
    if (common_.seed) {
      seed_ = *common_.seed;
    } else if (!config_.is_null()) {
      seed_ = require_seed(config_);
    }
    fs::create_directories(common_.out);
    const json identity{{"subcommand", subcommand_}, {"config", config_},   {"seed", seed_},
                        {"version", WICKBOUND_VERSION}, {"max_order", common_.max_order}};
    run_hash_ = fnv1a(identity.dump());
  }

  const json& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t max_order() const { return common_.max_order; }
  fs::path path(const std::string& name) const { return fs::path(common_.out) / name; }

  /// Every structured output carries the schema version and a link back to
  /// the manifest of the run that produced it.
  json stamp(json j) const {
    j["schema_version"] = kReportSchemaVersion;
    j["manifest"] = "manifest.json";
    j["run_hash"] = run_hash_;
    return j;
  }

  void write_json(const std::string& name, const json& j, Outcome& outcome) const {
    fs::create_directories(path(name).parent_path());
    std::ofstream(path(name)) << stamp(j).dump(2) << '\n';
    outcome.outputs.push_back(name);
  }

  void write_text(const std::string& name, const std::string& text, Outcome& outcome) const {
    std::ofstream(path(name)) << text;
    outcome.outputs.push_back(name);
  }

  void write_manifest(const Outcome& outcome, double seconds) const {
    json m{{"schema_version", kReportSchemaVersion},
           {"subcommand", subcommand_},
           {"config_path", common_.config_path},
           {"config", config_},
           {"seed", seed_},
           {"output_directory", common_.out},
           {"tool_version", WICKBOUND_VERSION},
           {"max_order", common_.max_order},
           {"wall_clock_seconds", seconds},
           {"run_hash", run_hash_},
           {"all_flags_true", outcome.ok},
           {"outputs", outcome.outputs}};
    std::ofstream(path("manifest.json")) << m.dump(2) << '\n';
  }

 private:
  static std::string fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
  }

  std::string subcommand_;
  Common common_;
  json config_;
  std::uint64_t seed_ = 0;
  std::string run_hash_;
};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// partition-stats ------------------------------------------------------------

Outcome partition_stats(const Run& run, std::size_t n_min, std::size_t n_max) {
  const auto& cfg = run.config();
  if (cfg.is_object()) {
    n_min = cfg.value("n_min", n_min);
    n_max = cfg.value("n_max", n_max);
  }
  if (n_min < 1 || n_max < n_min) throw InvalidInput("partition-stats needs 1 <= n_min <= n_max");
  const EnumerationLimits limits{run.max_order()};
  Outcome out;
  std::ostringstream csv;
  csv << "n,lhs,rhs,ratio,flag\n";
  json reports = json::array();
  for (std::size_t n = n_min; n <= n_max; ++n) {
    const auto r = verify_comb_est(n, limits);
    csv << n << ',' << r.witnesses.at("lhs_exact") << ',' << num(r.rhs) << ',' << num(r.ratio) << ','
        << (r.flag ? "true" : "false") << '\n';
    reports.push_back(r);
    out.ok = out.ok && r.flag;
  }
  run.write_text("partition_stats.csv", csv.str(), out);
  run.write_json("partition_stats.json", {{"table", "partition_stats.csv"}, {"reports", reports}, {"all_flags_true", out.ok}},
                 out);
  out.summary = {{"rows", n_max - n_min + 1}, {"all_flags_true", out.ok}};
  return out;
}

// verify-bounds --------------------------------------------------------------

struct Matrix {
  std::vector<std::size_t> n{1, 2}, m{1, 2};
  std::vector<int> p{1, 2};
};

Matrix read_matrix(const json& cfg) {
  Matrix mx;
  if (cfg.contains("matrix")) {
    const auto& j = cfg["matrix"];
    mx.n = j.value("n", mx.n);
    mx.m = j.value("m", mx.m);
    mx.p = j.value("p", mx.p);
  }
  for (int p : mx.p)
    if (p != 1 && p != 2) throw InvalidInput("matrix.p entries must be 1 or 2");
  for (auto v : mx.n)
    if (v == 0) throw InvalidInput("matrix.n entries must be >= 1");
  for (auto v : mx.m)
    if (v == 0) throw InvalidInput("matrix.m entries must be >= 1");
  return mx;
}

void scale_rhs(BoundReport& r, double scale) {
  if (scale == 1.0) return;
  r.rhs *= scale;
  r.ratio = r.rhs != 0.0 ? r.lhs / r.rhs : (r.lhs == 0.0 ? 0.0 : INFINITY);
  r.flag = r.flag && r.lhs <= r.rhs * (1.0 + kBoundSlack);
  r.constants["rhs_scale"] = scale;
}

std::vector<IndexSequence> repeat_tuples(const IndexSequence& anchors, std::size_t k) { return all_tuples(anchors, k); }

/// Phi kernel norm, observable bound (X = first psi anchor) and the joint bound over the
/// configured matrix for one field.
template <CumulantSource S>
std::vector<BoundReport> field_checks(const S& source, const FieldView& psi, const FieldView& phi, const Matrix& mx,
                                      const EnumerationLimits& limits) {
  std::vector<BoundReport> out;
  for (auto n : mx.n)
    for (int p : mx.p) {
      BoundReport worst;
      bool have = false;
      for (const auto& xp : repeat_tuples(phi.anchors, n)) {
        auto r = phi_norm_check(source, phi, n, static_cast<double>(p), xp, limits);
        if (!have || (worst.flag && (!r.flag || r.ratio > worst.ratio))) worst = r;
        have = true;
      }
      out.push_back(worst);
      out.push_back(observable_bound_check(source, phi, Observable::point(psi.anchors.front()), n, p, {}, limits));
    }
  for (auto m : mx.m)
    for (auto n : mx.n)
      for (int p : mx.p) out.push_back(joint_bound_check(source, psi, phi, m, n, p, {}, {}, limits));
  return out;
}

Outcome verify_bounds(const Run& run) {
  const auto& cfg = run.config();
  if (!cfg.is_object()) throw InvalidInput("verify-bounds needs --config");
  const Matrix mx = read_matrix(cfg);
  const double rhs_scale = cfg.value("rhs_scale", 1.0);
  const EnumerationLimits limits{run.max_order()};
  std::size_t top = 1;
  for (auto v : mx.n) top = std::max(top, 2 * v);
  for (auto v : mx.m) top = std::max(top, 2 * v);
  for (auto a : mx.m)
    for (auto b : mx.n) top = std::max(top, a + b);
  if (top > run.max_order())
    throw InvalidInput("matrix needs cumulants of order " + std::to_string(top) + " > --max-order " +
                       std::to_string(run.max_order()));

  const json field = cfg.value("field", json{{"kind", "sinc"}});
  const auto kind = field.value("kind", std::string("sinc"));
  std::vector<std::pair<std::string, BoundReport>> reports;

  for (auto n : mx.n)
    if (2 * n <= 12) reports.emplace_back("combinatorics", verify_comb_est(n, limits));

  if (kind == "sinc" || kind == "spectral") {
    const auto radius = field.value("radius", std::int64_t{200});
    const auto gauss = spectral_field_from_json(field);
    const GaussianCumulants source(gauss);
    auto compact = [&](Pair which) {
      const auto& s = gauss.spectrum(which).support_radius;
      return s.has_value() && *s <= radius;
    };
    const auto psi = lattice_view(0, radius, compact(Pair::PsiPsi) && compact(Pair::PsiPhi));
    const auto phi = lattice_view(1, radius, compact(Pair::PhiPhi) && compact(Pair::PsiPhi));
    const auto psd = check_psd(gauss.spectrum(Pair::PsiPsi), gauss.spectrum(Pair::PhiPhi),
                               gauss.spectrum(Pair::PsiPhi), gauss.grid());
    auto psd_report = make_bound("psd_check", std::max(0.0, -psd.worst_margin), 1e-12);
    psd_report.flag = psd.ok;
    psd_report.constants["worst_margin"] = psd.worst_margin;
    psd_report.constants["worst_k"] = psd.worst_k;
    reports.emplace_back(kind, psd_report);
    for (auto& r : field_checks(source, psi, phi, mx, limits)) reports.emplace_back(kind, r);
  } else if (kind == "discrete") {
    const auto count = field.value("count", std::size_t{3});
    const auto per = field.value("sites_per_component", std::size_t{2});
    const auto atoms = field.value("atoms", std::size_t{6});
    const bool complex_valued = field.value("complex", true);
    std::mt19937_64 rng(run.seed());
    std::vector<std::uint64_t> psi_sites, phi_sites;
    for (std::size_t s = 0; s < per; ++s) {
      psi_sites.push_back(s);
      phi_sites.push_back(per + s);
    }
    for (std::size_t k = 0; k < count; ++k) {
      const auto f = random_discrete_field(rng, 2 * per, atoms, !complex_valued);
      const CumulantTable table(f);
      const auto psi = discrete_view("psi", psi_sites, complex_valued);
      const auto phi = discrete_view("phi", phi_sites, complex_valued);
      for (auto& r : field_checks(table, psi, phi, mx, limits)) reports.emplace_back("discrete" + std::to_string(k), r);
    }
  } else {
    throw InvalidInput("unknown field kind '" + kind + "' (expected sinc, spectral or discrete)");
  }

  Outcome out;
  json index = json::array();
  std::size_t failed = 0;
  for (auto& [label, r] : reports) {
    scale_rhs(r, rhs_scale);
    std::ostringstream name;
    name << "reports/" << label << "__" << r.id;
    if (r.n) name << "_n" << *r.n;
    if (r.m) name << "_m" << *r.m;
    if (r.p) name << "_p" << p_label(*r.p);
    name << ".json";
    json j = r;
    j["field"] = label;
    run.write_json(name.str(), j, out);
    index.push_back({{"file", name.str()}, {"field", label}, {"id", r.id}, {"flag", r.flag}, {"ratio", r.ratio}});
    if (!r.flag) ++failed;
  }
  out.ok = failed == 0;
  out.summary = {{"field_kind", kind}, {"reports", reports.size()}, {"failed", failed}, {"all_flags_true", out.ok}};
  run.write_json("verify_bounds.json", {{"summary", out.summary}, {"reports", index}}, out);
  return out;
}

// example-gaussian -----------------------------------------------------------

Outcome example_gaussian(const Run& run) {
  const auto& cfg = run.config();
  std::vector<std::int64_t> radii{1, 10, 100, 1000, 10000};
  std::vector<std::int64_t> fit_radii{100, 1000, 10000};
  double grid = SpectralGaussianField::kDefaultGrid;
  if (cfg.is_object()) {
    radii = cfg.value("radii", radii);
    fit_radii = cfg.value("fit_radii", fit_radii);
    grid = cfg.value("grid", grid);
  }
  const auto field = sinc_coupling_example(static_cast<std::size_t>(grid));
  const GaussianCumulants source(field);
  const auto psd = check_psd(field.spectrum(Pair::PsiPsi), field.spectrum(Pair::PhiPhi), field.spectrum(Pair::PsiPhi),
                             field.grid());
  const auto l1 = l1_divergence_probe(source, 0, radii, 1.0);
  const auto fit = l1_divergence_probe(source, 0, fit_radii, 1.0);
  const auto l2 = l1_divergence_probe(source, 0, radii, 2.0);

  const double target_slope = 2.0 / std::numbers::pi;
  const double slope_error = std::abs(fit.slope / target_slope - 1.0);
  const double l2_last = l2.rows.back().partial_sum;
  const bool slope_ok = slope_error <= 0.05;
  const bool l2_ok = std::abs(l2_last - 0.5) <= 1e-3;

  Outcome out;
  run.write_text("gaussian_l1_partial_sums.csv", l1.to_csv(), out);
  run.write_text("gaussian_l2_partial_sums.csv", l2.to_csv(), out);
  json flags{{"psd_check", psd.ok}, {"l2_limit_half", l2_ok}, {"l1_log_slope_2_over_pi", slope_ok}};
  out.ok = psd.ok && l2_ok && slope_ok;
  json j{{"psd", {{"ok", psd.ok}, {"worst_margin", psd.worst_margin}, {"worst_k", psd.worst_k}, {"grid", field.grid()}}},
         {"l1",
          {{"table", "gaussian_l1_partial_sums.csv"},
           {"fit_radii", fit_radii},
           {"slope", fit.slope},
           {"intercept", fit.intercept},
           {"target_slope", target_slope},
           {"relative_error", slope_error},
           {"harmonic_odd_slope", 1.0 / std::numbers::pi}}},
         {"l2", {{"table", "gaussian_l2_partial_sums.csv"}, {"radius", l2.rows.back().radius}, {"partial_sum", l2_last}}},
         {"flags", flags},
         {"all_flags_true", out.ok}};
  run.write_json("example_gaussian.json", j, out);
  out.summary = {{"slope", fit.slope}, {"l2_partial_sum", l2_last}, {"flags", flags}, {"all_flags_true", out.ok}};
  return out;
}

// dnls-demo ------------------------------------------------------------------

Outcome dnls_demo(const Run& run) {
  json cfg = run.config().is_object() ? run.config() : json::object();
  cfg["seed"] = run.seed();
  const auto base = dnls::config_from_json(cfg);
  dnls::StudyPlan plan;
  plan.lambdas = cfg.value("lambdas", plan.lambdas);
  plan.zero_horizon = cfg.value("zero_lambda_horizon", plan.zero_horizon);
  plan.zero_step = cfg.value("zero_lambda_step", plan.zero_step);
  plan.points = cfg.value("points_per_run", plan.points);
  plan.agreement = cfg.value("agreement", plan.agreement);

  const auto study = dnls::duhamel_study(base, plan);
  std::map<double, double> fitted;
  for (const auto& f : study.fits) fitted[f.lambda] = f.constant;

  Outcome out;
  std::ostringstream csv;
  csv << "t,lambda,residual,std_error,paired_std_error,fit\n";
  for (const auto& r : study.rows) {
    const double fit = r.lambda > 0.0 ? fitted[r.lambda] * r.lambda * r.t : 0.0;
    csv << num(r.t) << ',' << num(r.lambda) << ',' << num(r.residual) << ',' << num(r.std_error) << ','
        << num(r.paired_std_error) << ',' << num(fit) << '\n';
  }
  run.write_text("dnls_residuals.csv", csv.str(), out);
  std::ostringstream fits;
  fits << "lambda,C\n";
  for (const auto& f : study.fits) fits << num(f.lambda) << ',' << num(f.constant) << '\n';
  run.write_text("dnls_fits.csv", fits.str(), out);

  const bool zero_in_plan = std::count(plan.lambdas.begin(), plan.lambdas.end(), 0.0) > 0;
  json flags = json::object();
  if (zero_in_plan) flags["zero_lambda_within_3_sigma"] = study.zero_lambda_ok;
  if (study.fits.size() >= 2) flags["constants_agree"] = study.constants_agree;
  flags["norm_conserved"] = study.max_norm_drift <= 1e-10;
  out.ok = true;
  for (const auto& [k, v] : flags.items()) out.ok = out.ok && v.get<bool>();
  json fit_json = json::array();
  for (const auto& f : study.fits) fit_json.push_back({{"lambda", f.lambda}, {"C", f.constant}});
  json j{{"config", dnls::to_json(base)},
         {"plan",
          {{"lambdas", plan.lambdas},
           {"zero_lambda_horizon", plan.zero_horizon},
           {"zero_lambda_step", plan.zero_step},
           {"points_per_run", plan.points},
           {"agreement", plan.agreement}}},
         {"residual_table", "dnls_residuals.csv"},
         {"fit_table", "dnls_fits.csv"},
         {"fits", fit_json},
         {"spread", study.spread},
         {"zero_lambda_max_sigma", study.zero_lambda_sigma},
         {"max_norm_drift", study.max_norm_drift},
         {"initial_law", "harmonic Gibbs (lambda = 0) surrogate"},
         {"flags", flags},
         {"all_flags_true", out.ok}};
  run.write_json("dnls_demo.json", j, out);
  out.summary = {{"fits", fit_json}, {"spread", study.spread}, {"flags", flags}, {"all_flags_true", out.ok}};
  return out;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config file")->envname("WICKBOUND_CONFIG");
  sub->add_option("--out", c.out, "output directory")->envname("WICKBOUND_OUT")->capture_default_str();
  sub->add_option("--seed", c.seed, "RNG seed (overrides the config)")->envname("WICKBOUND_SEED");
  sub->add_option("--max-order", c.max_order, "largest cumulant order / partition size allowed")
      ->envname("WICKBOUND_MAX_ORDER")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wickbound: cumulant and clustering-bound verification"};
  app.set_version_flag("--version", std::string(WICKBOUND_VERSION));
  app.require_subcommand(1);

  Common common;
  std::size_t n_min = 1, n_max = 6;
  auto* ps = app.add_subcommand("partition-stats", "sum over partitions of prod |S|! against (2n)! e^{2n}");
  add_common(ps, common);
  ps->add_option("--n-min", n_min, "smallest n")->capture_default_str();
  ps->add_option("--n-max", n_max, "largest n (2n must fit the size guard)")->capture_default_str();
  auto* vb = app.add_subcommand("verify-bounds", "clustering-bound matrix for one field config");
  add_common(vb, common);
  auto* eg = app.add_subcommand("example-gaussian", "l1 divergence / l2 convergence of the sinc coupling");
  add_common(eg, common);
  auto* dd = app.add_subcommand("dnls-demo", "Duhamel residual study for the lattice NLS");
  add_common(dd, common);

  CLI11_PARSE(app, argc, argv);

  const auto start = std::chrono::steady_clock::now();
  try {
    std::string name;
    for (auto* sub : {ps, vb, eg, dd})
      if (sub->parsed()) name = sub->get_name();
    Run run(name, common);
    Outcome outcome;
    if (name == "partition-stats")
      outcome = partition_stats(run, n_min, n_max);
    else if (name == "verify-bounds")
      outcome = verify_bounds(run);
    else if (name == "example-gaussian")
      outcome = example_gaussian(run);
    else
      outcome = dnls_demo(run);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    run.write_manifest(outcome, seconds);
    std::cout << outcome.summary.dump(2) << '\n';
    if (!outcome.ok) std::cerr << name << ": at least one flag is false\n";
    return outcome.ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
