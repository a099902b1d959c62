#include "lscrit/harness.hpp"

#include "lscrit/math_util.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lscrit {

namespace {

using nlohmann::json;

constexpr std::uint64_t kDataKey = 0x64617461ull;
constexpr std::uint64_t kUntemperedKey = ~0ull;
constexpr std::uint64_t kMleKey = 0x6d6c65ull;
constexpr std::uint64_t kRrrTrueParamSeed = 20240817ull;

bool bit_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

std::string kind_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::gmm: return "gmm";
    case FamilyKind::rrr: return "rrr";
    case FamilyKind::normal_mean: return "normal_mean";
    case FamilyKind::normal_mean_conj: return "normal_mean_conj";
  }
  return "?";
}

FamilyKind kind_from_name(const std::string& name) {
  if (name == "gmm") return FamilyKind::gmm;
  if (name == "rrr") return FamilyKind::rrr;
  if (name == "normal_mean") return FamilyKind::normal_mean;
  if (name == "normal_mean_conj") return FamilyKind::normal_mean_conj;
  throw std::invalid_argument("config: unknown family kind '" + name + "'");
}

int svd_rank(const Eigen::MatrixXd& m, double threshold) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > threshold) ++rank;
  return rank;
}

void check_unknown_keys(const json& j, const std::vector<std::string>& allowed,
                        const std::string& where) {
  std::vector<std::string> unknown;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      unknown.push_back(where.empty() ? it.key() : where + "." + it.key());
  }
  if (!unknown.empty()) {
    std::string msg = "config: unknown key(s):";
    for (const auto& k : unknown) msg += " " + k;
    throw std::invalid_argument(msg);
  }
}

Eigen::VectorXd parse_true_params(const ExperimentConfig& cfg, const json& j) {
  check_unknown_keys(j, {"weights", "means", "A", "B", "theta"}, "true_params");
  switch (cfg.kind) {
    case FamilyKind::gmm: {
      if (!j.contains("weights") || !j.contains("means"))
        throw std::invalid_argument("config: gmm true_params need weights and means");
      const auto jw = j.at("weights");
      const auto jm = j.at("means");
      Eigen::VectorXd w(jw.size());
      for (std::size_t h = 0; h < jw.size(); ++h) w[h] = jw.at(h).get<double>();
      Eigen::MatrixXd mu(jm.size(), cfg.output_dim);
      for (std::size_t h = 0; h < jm.size(); ++h) {
        if (static_cast<int>(jm.at(h).size()) != cfg.output_dim)
          throw std::invalid_argument("config: mean row dimension != N");
        for (int k = 0; k < cfg.output_dim; ++k) mu(h, k) = jm.at(h).at(k).get<double>();
      }
      return pack_gmm(w, mu);
    }
    case FamilyKind::rrr: {
      if (!j.contains("A") || !j.contains("B"))
        throw std::invalid_argument("config: rrr true_params need A and B");
      auto read = [](const json& jm) {
        Eigen::MatrixXd m(jm.size(), jm.at(0).size());
        for (std::size_t i = 0; i < jm.size(); ++i)
          for (std::size_t k = 0; k < jm.at(i).size(); ++k) m(i, k) = jm.at(i).at(k).get<double>();
        return m;
      };
      return pack_rrr(read(j.at("A")), read(j.at("B")));
    }
    default: {
      if (!j.contains("theta"))
        throw std::invalid_argument("config: normal-mean true_params need theta");
      Eigen::VectorXd t(1);
      t[0] = j.at("theta").get<double>();
      return t;
    }
  }
}

json true_params_to_json(const ExperimentConfig& cfg) {
  json j;
  const ModelFamily fam = generating_family(cfg);
  switch (cfg.kind) {
    case FamilyKind::gmm: {
      const GmmParams p = unpack_gmm(fam, cfg.true_params);
      j["weights"] = std::vector<double>(p.weights.data(), p.weights.data() + p.weights.size());
      json means = json::array();
      for (int h = 0; h < p.means.rows(); ++h) {
        json row = json::array();
        for (int k = 0; k < p.means.cols(); ++k) row.push_back(p.means(h, k));
        means.push_back(row);
      }
      j["means"] = means;
      break;
    }
    case FamilyKind::rrr: {
      const RrrParams p = unpack_rrr(fam, cfg.true_params);
      auto dump = [](const Eigen::MatrixXd& m) {
        json out = json::array();
        for (int i = 0; i < m.rows(); ++i) {
          json row = json::array();
          for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
          out.push_back(row);
        }
        return out;
      };
      j["A"] = dump(p.A);
      j["B"] = dump(p.B);
      break;
    }
    default:
      j["theta"] = cfg.true_params[0];
  }
  return j;
}

void apply_config_json(ExperimentConfig& cfg, const json& j, bool from_preset) {
  check_unknown_keys(j,
                     {"preset", "name", "family", "true_params", "n", "candidates", "beta0_list",
                      "lambda_policy", "lambda_beta0_pair", "criteria", "plugin", "chains",
                      "seed"},
                     "");
  if (j.contains("family")) {
    const json& f = j.at("family");
    check_unknown_keys(f, {"kind", "N", "M", "H_true", "true_rank", "prior_tau2"}, "family");
    if (!from_preset || f.contains("kind")) cfg.kind = kind_from_name(f.at("kind").get<std::string>());
    if (f.contains("N")) cfg.output_dim = f.at("N").get<int>();
    if (f.contains("M")) cfg.input_dim = f.at("M").get<int>();
    if (f.contains("H_true")) cfg.true_components = f.at("H_true").get<int>();
    if (f.contains("true_rank")) cfg.true_rank = f.at("true_rank").get<int>();
    if (f.contains("prior_tau2")) cfg.prior_tau2 = f.at("prior_tau2").get<double>();
  }
  if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
  if (j.contains("n")) cfg.n = j.at("n").get<int>();
  if (j.contains("candidates")) cfg.candidates = j.at("candidates").get<std::vector<int>>();
  if (j.contains("beta0_list")) cfg.beta0_list = j.at("beta0_list").get<std::vector<double>>();
  if (j.contains("lambda_policy"))
    cfg.lambda_policy = lambda_policy_from_name(j.at("lambda_policy").get<std::string>());
  if (j.contains("lambda_beta0_pair")) {
    const auto pair = j.at("lambda_beta0_pair").get<std::vector<double>>();
    if (pair.size() != 2) throw std::invalid_argument("config: lambda_beta0_pair needs 2 values");
    cfg.lambda_beta0_pair = {pair[0], pair[1]};
  }
  if (j.contains("criteria")) {
    cfg.criteria.clear();
    for (const auto& name : j.at("criteria"))
      cfg.criteria.push_back(criterion_from_name(name.get<std::string>()));
  }
  if (j.contains("plugin")) {
    cfg.plugin = j.at("plugin").get<std::string>();
    if (cfg.plugin != "map" && cfg.plugin != "mle")
      throw std::invalid_argument("config: plugin must be 'map' or 'mle'");
  }
  if (j.contains("chains")) {
    const json& c = j.at("chains");
    check_unknown_keys(c, {"chains", "warmup", "draws", "thin", "initial_scale"}, "chains");
    if (c.contains("chains")) cfg.chains.chains = c.at("chains").get<int>();
    if (c.contains("warmup")) cfg.chains.warmup = c.at("warmup").get<int>();
    if (c.contains("draws")) cfg.chains.draws = c.at("draws").get<int>();
    if (c.contains("thin")) cfg.chains.thin = c.at("thin").get<int>();
    if (c.contains("initial_scale")) cfg.chains.initial_scale = c.at("initial_scale").get<double>();
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  // true_params last: depends on kind/dims.
  if (j.contains("true_params")) cfg.true_params = parse_true_params(cfg, j.at("true_params"));
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.candidates.empty()) throw std::invalid_argument("config: candidate set is empty");
  for (int h : cfg.candidates)
    if (h < 1) throw std::invalid_argument("config: candidates must be >= 1");
  if (cfg.beta0_list.empty()) throw std::invalid_argument("config: beta0_list is empty");
  for (double b : cfg.beta0_list)
    if (!(b > 0.0)) throw std::invalid_argument("config: beta0 values must be > 0");
  if (cfg.criteria.empty()) throw std::invalid_argument("config: criteria list is empty");
  if (cfg.n < 1) throw std::invalid_argument("config: n must be >= 1");
  validate_params(generating_family(cfg), cfg.true_params);
  if (cfg.kind == FamilyKind::rrr && cfg.true_rank >= 0) {
    const RrrParams p = unpack_rrr(generating_family(cfg), cfg.true_params);
    const int rank = svd_rank(p.B * p.A, 1e-8);
    if (rank != cfg.true_rank)
      throw std::invalid_argument("config: rank(B*A*) = " + std::to_string(rank) +
                                  " does not match declared true_rank " +
                                  std::to_string(cfg.true_rank));
  }
}

bool exact_lambda_applicable(const ExperimentConfig& cfg, int candidate) {
  switch (cfg.kind) {
    case FamilyKind::rrr:
      return cfg.true_rank >= 0 &&
             cfg.true_rank <= std::min({candidate, cfg.input_dim, cfg.output_dim});
    case FamilyKind::normal_mean:
    case FamilyKind::normal_mean_conj:
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string lambda_policy_name(LambdaPolicy p) {
  switch (p) {
    case LambdaPolicy::automatic: return "auto";
    case LambdaPolicy::exact: return "exact";
    case LambdaPolicy::estimated: return "estimated";
    case LambdaPolicy::bound: return "bound";
  }
  return "?";
}

LambdaPolicy lambda_policy_from_name(const std::string& name) {
  if (name == "auto") return LambdaPolicy::automatic;
  if (name == "exact") return LambdaPolicy::exact;
  if (name == "estimated") return LambdaPolicy::estimated;
  if (name == "bound") return LambdaPolicy::bound;
  throw std::invalid_argument("config: unknown lambda_policy '" + name + "'");
}

std::vector<std::string> preset_names() { return {"rrr_table2", "gmm_table3", "gmm_table4"}; }

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.chains.chains = 4;
  cfg.chains.warmup = 1000;
  cfg.chains.draws = 1000;
  cfg.chains.thin = 1;
  cfg.chains.initial_scale = 0.25;
  cfg.seed = 1;
  if (name == "rrr_table2") {
    cfg.kind = FamilyKind::rrr;
    cfg.input_dim = 3;
    cfg.output_dim = 4;
    cfg.true_components = 3;
    cfg.true_rank = 3;
    cfg.n = 100;
    cfg.candidates = {3};
    cfg.beta0_list = {3, 5, 7, 10};
    // True (A*, B*) drawn once from the prior at a pinned seed; the resulting
    // rank is verified against true_rank in validate_config.
    const ModelFamily fam = ModelFamily::rrr(cfg.input_dim, cfg.output_dim, cfg.true_components);
    Rng rng(derive_seed(kRrrTrueParamSeed, 0, 0));
    cfg.true_params = draw_from_prior(fam, rng);
  } else if (name == "gmm_table3") {
    cfg.kind = FamilyKind::gmm;
    cfg.output_dim = 2;
    cfg.true_components = 2;
    cfg.n = 400;  // 200 per component
    cfg.candidates = {1, 2, 3, 4};
    cfg.beta0_list = {1, 10};
    Eigen::VectorXd w(2);
    w << 0.5, 0.5;
    Eigen::MatrixXd mu(2, 2);
    mu << -1, -1, 1, 1;
    cfg.true_params = pack_gmm(w, mu);
  } else if (name == "gmm_table4") {
    cfg.kind = FamilyKind::gmm;
    cfg.output_dim = 2;
    cfg.true_components = 3;
    cfg.n = 1800;  // 600 per component
    cfg.candidates = {1, 2, 3, 4};
    cfg.beta0_list = {1, 10};
    Eigen::VectorXd w(3);
    w << 1.0 / 3, 1.0 / 3, 1.0 / 3;
    Eigen::MatrixXd mu(3, 2);
    mu << -2, -2, 0, 0, 2, 2;
    cfg.true_params = pack_gmm(w, mu);
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
  std::string trimmed = text;
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r\n"));
  const auto last = trimmed.find_last_not_of(" \t\r\n");
  trimmed.erase(last == std::string::npos ? 0 : last + 1);
  if (trimmed.empty()) throw std::invalid_argument("config: empty text");

  const auto presets = preset_names();
  if (std::find(presets.begin(), presets.end(), trimmed) != presets.end())
    return preset_config(trimmed);

  json j;
  try {
    j = json::parse(trimmed);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: not a preset name or valid JSON: ") +
                                e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");

  ExperimentConfig cfg;
  bool from_preset = false;
  if (j.contains("preset")) {
    cfg = preset_config(j.at("preset").get<std::string>());
    from_preset = true;
  }
  if (!from_preset) {
    for (const char* key : {"family", "true_params", "n", "candidates"})
      if (!j.contains(key))
        throw std::invalid_argument(std::string("config: missing required key '") + key + "'");
    if (!j.at("family").contains("kind"))
      throw std::invalid_argument("config: missing required key 'family.kind'");
    if (j.contains("beta0_list") == false) cfg.beta0_list = {1.0};
  }
  apply_config_json(cfg, j, from_preset);
  if (cfg.kind == FamilyKind::rrr && cfg.true_rank < 0) {
    const RrrParams p = unpack_rrr(generating_family(cfg), cfg.true_params);
    cfg.true_rank = svd_rank(p.B * p.A, 1e-8);
  }
  validate_config(cfg);
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  json f;
  f["kind"] = kind_name(cfg.kind);
  f["N"] = cfg.output_dim;
  if (cfg.kind == FamilyKind::rrr) {
    f["M"] = cfg.input_dim;
    f["true_rank"] = cfg.true_rank;
  }
  if (cfg.kind == FamilyKind::gmm || cfg.kind == FamilyKind::rrr)
    f["H_true"] = cfg.true_components;
  if (cfg.kind == FamilyKind::normal_mean_conj) f["prior_tau2"] = cfg.prior_tau2;
  j["family"] = f;
  j["true_params"] = true_params_to_json(cfg);
  j["n"] = cfg.n;
  j["candidates"] = cfg.candidates;
  j["beta0_list"] = cfg.beta0_list;
  j["lambda_policy"] = lambda_policy_name(cfg.lambda_policy);
  j["lambda_beta0_pair"] = {cfg.lambda_beta0_pair.first, cfg.lambda_beta0_pair.second};
  json crit = json::array();
  for (Criterion c : cfg.criteria) crit.push_back(criterion_name(c));
  j["criteria"] = crit;
  j["plugin"] = cfg.plugin;
  j["chains"] = {{"chains", cfg.chains.chains},
                 {"warmup", cfg.chains.warmup},
                 {"draws", cfg.chains.draws},
                 {"thin", cfg.chains.thin},
                 {"initial_scale", cfg.chains.initial_scale}};
  j["seed"] = cfg.seed;
  return j.dump(2);
}

ModelFamily generating_family(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case FamilyKind::gmm: return ModelFamily::gmm(cfg.true_components, cfg.output_dim);
    case FamilyKind::rrr:
      return ModelFamily::rrr(cfg.input_dim, cfg.output_dim, cfg.true_components);
    case FamilyKind::normal_mean: return ModelFamily::normal_mean();
    case FamilyKind::normal_mean_conj: return ModelFamily::normal_mean_conjugate(cfg.prior_tau2);
  }
  throw std::logic_error("unreachable");
}

ModelFamily candidate_family(const ExperimentConfig& cfg, int candidate) {
  switch (cfg.kind) {
    case FamilyKind::gmm: return ModelFamily::gmm(candidate, cfg.output_dim);
    case FamilyKind::rrr: return ModelFamily::rrr(cfg.input_dim, cfg.output_dim, candidate);
    case FamilyKind::normal_mean: return ModelFamily::normal_mean();
    case FamilyKind::normal_mean_conj: return ModelFamily::normal_mean_conjugate(cfg.prior_tau2);
  }
  throw std::logic_error("unreachable");
}

Dataset generate_data(const ExperimentConfig& cfg) {
  return simulate(generating_family(cfg), cfg.true_params, cfg.n,
                  derive_seed(cfg.seed, 0, kDataKey));
}

CandidateOutcome run_candidate(const ExperimentConfig& cfg, const Dataset& data,
                               int candidate_index) {
  const int candidate = cfg.candidates.at(candidate_index);
  const std::uint64_t stream = static_cast<std::uint64_t>(candidate_index) + 1;
  CandidateOutcome out;
  out.family = candidate_family(cfg, candidate);
  out.id = (cfg.kind == FamilyKind::gmm || cfg.kind == FamilyKind::rrr)
               ? "H=" + std::to_string(candidate)
               : kind_name(cfg.kind);

  const bool wants_ls = std::find(cfg.criteria.begin(), cfg.criteria.end(), Criterion::LS) !=
                        cfg.criteria.end();
  const bool wants_sbic = std::find(cfg.criteria.begin(), cfg.criteria.end(), Criterion::SBIC) !=
                          cfg.criteria.end();
  const bool wants_lambda = wants_ls || wants_sbic;

  // beta = 1 run: empirical loss, plug-in, diagnostics.
  if (wants_lambda) {
    ChainConfig c1 = cfg.chains;
    c1.seed = derive_seed(cfg.seed, stream, kUntemperedKey);
    const PosteriorSamples post1 = run_chains(out.family, data, TemperSpec::beta_one(), c1);
    out.t_n = empirical_loss(post1, out.family, data);
    const Eigen::VectorXd plug =
        cfg.plugin == "mle" ? fit_mle(out.family, data, derive_seed(cfg.seed, stream, kMleKey))
                            : plug_in_estimate(out.family, data, post1);
    out.nll_plugin = negative_log_likelihood(out.family, plug, data);
    try {
      const Diagnostics d = diagnose(post1);
      out.beta1_diag.ess_min = d.min_ess;
      out.beta1_diag.rhat_max = d.max_r_hat;
    } catch (const std::invalid_argument&) {
    }
  }

  // Tempered runs: the WBIC grid plus, when estimating, the lambda-hat pair.
  const bool estimate = wants_lambda && (cfg.lambda_policy == LambdaPolicy::estimated ||
                                         (cfg.lambda_policy == LambdaPolicy::automatic &&
                                          !exact_lambda_applicable(cfg, candidate)));
  std::set<double> beta0s(cfg.beta0_list.begin(), cfg.beta0_list.end());
  if (estimate) {
    beta0s.insert(cfg.lambda_beta0_pair.first);
    beta0s.insert(cfg.lambda_beta0_pair.second);
  }
  for (double b0 : beta0s) {
    ChainConfig ct = cfg.chains;
    ct.seed = derive_seed(cfg.seed, stream, double_key(b0));
    const PosteriorSamples post = run_chains(out.family, data, TemperSpec::tempered(b0), ct);
    out.wbic_by_beta0.emplace(b0, wbic(post, out.family, data));
  }

  // Resolve lambda for LS/sBIC.
  if (wants_lambda) {
    if (estimate) {
      const double w1 = out.wbic_by_beta0.at(cfg.lambda_beta0_pair.first).value;
      const double w2 = out.wbic_by_beta0.at(cfg.lambda_beta0_pair.second).value;
      double lh = lambda_hat_from_wbic(w1, w2, cfg.lambda_beta0_pair.first,
                                       cfg.lambda_beta0_pair.second, cfg.n);
      if (lh < 0.0) {
        std::cerr << "[lscrit] warning: negative lambda_hat " << lh << " for " << out.id
                  << "; clamped to 0\n";
        lh = 0.0;
      }
      out.lambda = lh;
      out.lambda_source = LambdaSource::estimated;
    } else if (cfg.lambda_policy == LambdaPolicy::bound) {
      if (cfg.kind != FamilyKind::gmm)
        throw std::invalid_argument("lambda policy 'bound' applies to gmm only");
      out.lambda = gmm_lambda_bound(cfg.output_dim, candidate, candidate).lambda.value();
      out.lambda_source = LambdaSource::bound;
    } else {
      // exact (or automatic with an exact formula available)
      switch (cfg.kind) {
        case FamilyKind::rrr:
          out.lambda =
              aoyagi_lambda(cfg.input_dim, cfg.output_dim, candidate, cfg.true_rank).lambda.value();
          break;
        case FamilyKind::normal_mean:
        case FamilyKind::normal_mean_conj:
          out.lambda = regular_lambda(1).lambda.value();
          break;
        default:
          throw std::invalid_argument("lambda policy 'exact' has no formula for gmm candidates");
      }
      out.lambda_source = LambdaSource::exact;
    }
  }
  return out;
}

std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const Dataset data = generate_data(cfg);

  std::vector<CandidateOutcome> outcomes;
  for (std::size_t ci = 0; ci < cfg.candidates.size(); ++ci)
    outcomes.push_back(run_candidate(cfg, data, static_cast<int>(ci)));

  std::vector<double> beta0s = cfg.beta0_list;
  std::sort(beta0s.begin(), beta0s.end());
  std::vector<Criterion> criteria = cfg.criteria;
  std::sort(criteria.begin(), criteria.end());

  std::vector<ReportRow> rows;
  auto make_row = [&](const CandidateOutcome& o, Criterion c, double b0) {
    ReportRow row;
    row.candidate = o.id;
    row.criterion = c;
    row.beta0 = b0;
    row.seed = cfg.seed;
    switch (c) {
      case Criterion::WBIC: {
        const CriterionResult& r = o.wbic_by_beta0.at(b0);
        row.value = r.value;
        row.ess_min = r.diag.ess_min;
        row.rhat_max = r.diag.rhat_max;
        break;
      }
      case Criterion::LS: {
        const CriterionResult r = ls(o.t_n, o.lambda, o.lambda_source, cfg.n);
        row.value = r.value;
        row.lambda = o.lambda;
        row.lambda_source = lambda_source_name(o.lambda_source);
        row.ess_min = o.beta1_diag.ess_min;
        row.rhat_max = o.beta1_diag.rhat_max;
        break;
      }
      case Criterion::SBIC: {
        const CriterionResult r = sbic(o.nll_plugin, o.lambda, o.lambda_source, cfg.n);
        row.value = r.value;
        row.lambda = o.lambda;
        row.lambda_source = lambda_source_name(o.lambda_source);
        row.ess_min = o.beta1_diag.ess_min;
        row.rhat_max = o.beta1_diag.rhat_max;
        break;
      }
    }
    return row;
  };

  for (const auto& o : outcomes)
    for (Criterion c : criteria)
      for (double b0 : beta0s) rows.push_back(make_row(o, c, b0));

  // Mark the argmin per (criterion, beta0); ties break toward fewer parameters.
  for (Criterion c : criteria) {
    for (double b0 : beta0s) {
      std::vector<ModelCandidate> ranked;
      std::vector<std::size_t> row_index;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].criterion != c || !bit_equal(rows[i].beta0, b0)) continue;
        const std::size_t ci = row_index.size();
        ModelCandidate mc;
        mc.id = rows[i].candidate;
        mc.param_count = outcomes[ci].family.param_dim();
        mc.result.criterion = c;
        mc.result.value = rows[i].value;
        ranked.push_back(std::move(mc));
        row_index.push_back(i);
      }
      rows[row_index[select_model(ranked)]].selected = true;
    }
  }

  for (const auto& row : rows) {
    if (std::isfinite(row.rhat_max) && row.rhat_max > 1.1)
      std::cerr << "[lscrit] warning: R-hat " << row.rhat_max << " > 1.1 for " << row.candidate
                << " " << criterion_name(row.criterion) << " (beta0=" << row.beta0 << ")\n";
  }
  return rows;
}

ReportFormat report_format_from_name(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw std::invalid_argument("unknown report format '" + name + "'");
}

namespace {

const char* kReportHeader = "candidate,criterion,value,lambda,lambda_source,beta0,seed,ess_min,rhat_max,selected";

std::string csv_number(double v) { return std::isnan(v) ? std::string() : format_double(v); }

double csv_parse_number(const std::string& f) {
  if (f.empty()) return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(f.c_str(), &end);
  if (end == f.c_str()) throw std::invalid_argument("report csv: bad number '" + f + "'");
  return v;
}

json row_to_json(const ReportRow& row) {
  json j;
  j["candidate"] = row.candidate;
  j["criterion"] = criterion_name(row.criterion);
  j["value"] = row.value;
  if (std::isnan(row.lambda))
    j["lambda"] = nullptr;
  else
    j["lambda"] = row.lambda;
  j["lambda_source"] = row.lambda_source;
  j["beta0"] = row.beta0;
  j["seed"] = row.seed;
  if (std::isnan(row.ess_min))
    j["ess_min"] = nullptr;
  else
    j["ess_min"] = row.ess_min;
  if (std::isnan(row.rhat_max))
    j["rhat_max"] = nullptr;
  else
    j["rhat_max"] = row.rhat_max;
  j["selected"] = row.selected;
  return j;
}

ReportRow row_from_json(const json& j) {
  ReportRow row;
  row.candidate = j.at("candidate").get<std::string>();
  row.criterion = criterion_from_name(j.at("criterion").get<std::string>());
  row.value = j.at("value").get<double>();
  row.lambda = j.at("lambda").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                        : j.at("lambda").get<double>();
  row.lambda_source = j.at("lambda_source").get<std::string>();
  row.beta0 = j.at("beta0").get<double>();
  row.seed = j.at("seed").get<std::uint64_t>();
  row.ess_min = j.at("ess_min").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                          : j.at("ess_min").get<double>();
  row.rhat_max = j.at("rhat_max").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                            : j.at("rhat_max").get<double>();
  row.selected = j.at("selected").get<bool>();
  return row;
}

}  // namespace

std::string emit_report(const std::vector<ReportRow>& rows, ReportFormat format) {
  if (rows.empty()) throw std::invalid_argument("emit_report: no rows");
  if (format == ReportFormat::json) {
    json arr = json::array();
    for (const auto& row : rows) arr.push_back(row_to_json(row));
    return arr.dump(2) + "\n";
  }
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const auto& row : rows) {
    out << row.candidate << ',' << criterion_name(row.criterion) << ','
        << format_double(row.value) << ',' << csv_number(row.lambda) << ',' << row.lambda_source
        << ',' << format_double(row.beta0) << ',' << row.seed << ',' << csv_number(row.ess_min)
        << ',' << csv_number(row.rhat_max) << ',' << (row.selected ? 1 : 0) << '\n';
  }
  return out.str();
}

std::vector<ReportRow> parse_report(const std::string& text, ReportFormat format) {
  std::vector<ReportRow> rows;
  if (format == ReportFormat::json) {
    const json arr = json::parse(text);
    for (const auto& j : arr) rows.push_back(row_from_json(j));
    return rows;
  }
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("report csv: empty text");
  if (line.ends_with("\r")) line.pop_back();
  if (line != kReportHeader) throw std::invalid_argument("report csv: unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur.push_back(ch);
      }
    }
    fields.push_back(cur);
    if (fields.size() != 10) throw std::invalid_argument("report csv: bad field count");
    ReportRow row;
    row.candidate = fields[0];
    row.criterion = criterion_from_name(fields[1]);
    row.value = csv_parse_number(fields[2]);
    row.lambda = csv_parse_number(fields[3]);
    row.lambda_source = fields[4];
    row.beta0 = csv_parse_number(fields[5]);
    row.seed = std::strtoull(fields[6].c_str(), nullptr, 10);
    row.ess_min = csv_parse_number(fields[7]);
    row.rhat_max = csv_parse_number(fields[8]);
    row.selected = fields[9] == "1";
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string criterion_report_json(const CriterionResult& result, const std::string& candidate,
                                  std::uint64_t seed) {
  json j;
  j["criterion"] = criterion_name(result.criterion);
  j["value"] = result.value;
  if (result.lambda_used)
    j["lambda"] = *result.lambda_used;
  else
    j["lambda"] = nullptr;
  j["lambda_source"] = result.lambda_source ? lambda_source_name(*result.lambda_source) : "";
  if (result.beta0_used)
    j["beta0"] = *result.beta0_used;
  else
    j["beta0"] = nullptr;
  j["n"] = result.n;
  j["candidate"] = candidate;
  if (std::isnan(result.diag.ess_min))
    j["ess_min"] = nullptr;
  else
    j["ess_min"] = result.diag.ess_min;
  if (std::isnan(result.diag.rhat_max))
    j["rhat_max"] = nullptr;
  else
    j["rhat_max"] = result.diag.rhat_max;
  j["seed"] = seed;
  return j.dump(2);
}

bool operator==(const ReportRow& a, const ReportRow& b);

}  // namespace lscrit
