// phasefilter: command-line driver for the sampler, the diagonalizer and the
// supporting experiments.
//
// Exit codes: 0 success, 2 invalid input, 3 non-convergence, 4 I/O failure.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "phasefilter/phasefilter.hpp"

namespace pf = phasefilter;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitIo = 4;

struct Globals {
  std::uint64_t seed = 1;
  bool json = false;
  std::size_t threads = 1;
};

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    try {
      out.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw pf::DomainError("not a number: '" + item + "'");
  }
  return out;
}

std::vector<std::int64_t> parse_ints(const std::string& s) {
  std::vector<std::int64_t> out;
  for (double d : parse_doubles(s)) {
    if (d != static_cast<double>(static_cast<std::int64_t>(d))) throw pf::DomainError("not an integer in list");
    out.push_back(static_cast<std::int64_t>(d));
  }
  return out;
}

// "p=..,t=..,M=..,l=..,epsilon=.." on top of a base schedule.
pf::FilterSchedule apply_override(const pf::FilterSchedule& base, const std::string& text) {
  if (text.empty()) return base;
  int p = base.p, t = base.t, l = base.l;
  std::uint64_t M = base.M;
  double eps = base.epsilon;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw pf::DomainError("override entry needs key=value: '" + item + "'");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    try {
      if (key == "p")
        p = std::stoi(value);
      else if (key == "t")
        t = std::stoi(value);
      else if (key == "M")
        M = std::stoull(value);
      else if (key == "l")
        l = std::stoi(value);
      else if (key == "epsilon")
        eps = std::stod(value);
      else
        throw pf::DomainError("unknown override key '" + key + "'");
    } catch (const std::logic_error&) {
      throw pf::DomainError("bad override value for '" + key + "'");
    }
  }
  return pf::FilterSchedule::manual(base.n, p, t, M, l, eps, base.delta, base.nu);
}

pf::HermitianInput load_input(const std::string& path) {
  return pf::HermitianInput::validate(pf::load_matrix(path));
}

void emit(const Globals& g, const json& j, const std::string& human) {
  if (g.json)
    std::cout << j.dump(2) << '\n';
  else
    std::cout << human;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eigenvector sampling and diagonalization by iterated phase filtering"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random draw")->capture_default_str();
  app.add_flag("--json", g.json, "Print JSON reports");
  app.add_option("--threads", g.threads, "Worker threads for trial loops")->check(CLI::PositiveNumber);

  // gen
  auto* gen = app.add_subcommand("gen", "Write a Hermitian matrix with a prescribed spectrum");
  std::size_t gen_n = 0;
  std::string gen_spectrum, gen_out;
  double gen_gap = 0.0;
  bool gen_identity = false;
  gen->add_option("--n", gen_n, "Dimension")->required();
  gen->add_option("--spectrum", gen_spectrum, "Comma-separated eigenvalues in [0,1)");
  gen->add_option("--min-gap", gen_gap, "Random spectrum with this minimal circular gap");
  gen->add_flag("--identity-q", gen_identity, "Use Q = I (diagonal output)");
  gen->add_option("--out", gen_out, "Output matrix file")->required();

  // sample / diag / freq share matrix and schedule options.
  std::string matrix_path, override_text, out_dir;
  double delta = 1e-3, nu = 1.0;
  std::size_t max_restarts = 0, max_outer = 100, trials = 100;
  int budget_bits = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--matrix", matrix_path, "Input matrix file")->required();
    sub->add_option("--delta", delta, "Target eigenvector accuracy")->capture_default_str();
    sub->add_option("--nu", nu, "Success exponent nu (a = 1/nu)")->capture_default_str();
    sub->add_option("--schedule-override", override_text, "p=..,t=..,M=..,l=..,epsilon=..");
    sub->add_option("--budget-bits", budget_bits, "Truncate every product to this many bits");
  };
  auto* sample = app.add_subcommand("sample", "Sample one eigenvector");
  add_common(sample);
  sample->add_option("--max-restarts", max_restarts, "Restart limit (default ceil(10 n^nu))");

  auto* diag = app.add_subcommand("diag", "Recover the full eigenbasis");
  add_common(diag);
  diag->add_option("--max-outer", max_outer, "Outer round limit")->capture_default_str();
  diag->add_option("--out", out_dir, "Directory for eigenvector files and summary.json");

  auto* freq = app.add_subcommand("freq", "Histogram of sampled eigenvector indices");
  add_common(freq);
  freq->add_option("--trials", trials, "Number of sampler runs")->capture_default_str();

  auto* oracle = app.add_subcommand("oracle", "Jacobi eigendecomposition of a matrix");
  oracle->add_option("--matrix", matrix_path, "Input matrix file")->required();

  auto* disc = app.add_subcommand("discrepancy", "Discrepancy of a multiples sequence");
  std::string disc_g, disc_lambdas, disc_method = "exact";
  std::int64_t disc_modulus = 0;
  std::uint64_t disc_M = 0;
  double disc_eps = 0.05;
  int disc_l = 2;
  std::size_t disc_trials = 10000;
  disc->add_option("--g", disc_g, "Integer generator g (comma-separated) for frac(g n / N)");
  disc->add_option("--modulus", disc_modulus, "N for --g; also P for R(g, P) when N <= 512");
  disc->add_option("--lambdas", disc_lambdas, "Eigenvalues for a perturbed frac(m lambda') trial");
  disc->add_option("--M", disc_M, "Sequence length for --lambdas (default from epsilon, l)");
  disc->add_option("--epsilon", disc_eps, "Perturbation epsilon for --lambdas")->capture_default_str();
  disc->add_option("--l", disc_l, "Perturbation exponent for --lambdas")->capture_default_str();
  disc->add_option("--method", disc_method, "exact or mc")->check(CLI::IsMember({"exact", "mc"}));
  disc->add_option("--trials", disc_trials, "Random boxes for mc")->capture_default_str();

  auto* demmel = app.add_subcommand("demmel", "Close-pair case study");
  double demmel_eps = 1e-4;
  std::size_t demmel_n = 8, demmel_trials = 0;
  demmel->add_option("--eps-gap", demmel_eps, "Gap of the close pair")->capture_default_str();
  demmel->add_option("--n", demmel_n, "Even dimension")->capture_default_str();
  demmel->add_option("--trials", demmel_trials, "Sampler runs (default 16 n)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  pf::RngHandle rng(g.seed);
  try {
    if (*gen) {
      std::vector<double> spectrum;
      if (!gen_spectrum.empty())
        spectrum = parse_doubles(gen_spectrum);
      else if (gen_gap > 0.0)
        spectrum = pf::separated_spectrum(gen_n, gen_gap, rng);
      else
        throw pf::DomainError("gen needs --spectrum or --min-gap");
      const auto a = pf::generate_matrix(gen_n, spectrum, rng, gen_identity);
      pf::save_matrix(gen_out, a.matrix());
      emit(g, {{"n", gen_n}, {"spectrum", spectrum}, {"separation", a.separation()}, {"seed", g.seed}, {"out", gen_out}},
           "wrote " + gen_out + "\n");
      return 0;
    }

    if (*oracle) {
      const auto a = load_input(matrix_path);
      const auto e = pf::jacobi_eigh(a);
      const json j{{"n", a.dim()},
                   {"eigenvalues", e.eigenvalues},
                   {"separation", pf::measure_separation(e)},
                   {"residual_bound", e.residual_bound}};
      std::ostringstream h;
      h.precision(12);
      for (double l : e.eigenvalues) h << l << '\n';
      h << "separation " << pf::measure_separation(e) << '\n';
      emit(g, j, h.str());
      return 0;
    }

    if (*disc) {
      pf::SequenceReport rep;
      if (!disc_g.empty()) {
        const auto gv = parse_ints(disc_g);
        const auto seq = pf::multiples_sequence(gv, disc_modulus);
        rep.n = seq.size();
        rep.s = seq.dim();
        if (disc_method == "exact") {
          rep.discrepancy = pf::star_discrepancy_exact(seq);
          rep.kind = pf::EstimateKind::exact;
        } else {
          rep.discrepancy = pf::star_discrepancy_mc(seq, disc_trials, rng);
          rep.kind = pf::EstimateKind::monte_carlo_lower_bound;
          rep.seed = g.seed;
        }
        if (disc_modulus <= pf::kRSumMaxModulus && gv.size() <= 3) rep.r_sum = pf::niederreiter_r_sum(gv, disc_modulus);
      } else if (!disc_lambdas.empty()) {
        const auto lambdas = parse_doubles(disc_lambdas);
        const std::uint64_t M = disc_M ? disc_M : pf::choose_modulus(disc_eps, disc_l).M;
        rep = pf::pseudorandomness_trial(lambdas, {disc_eps, disc_l}, M, lambdas.size(), rng);
        rep.seed = g.seed;
      } else {
        throw pf::DomainError("discrepancy needs --g with --modulus, or --lambdas");
      }
      std::ostringstream h;
      h << to_string(rep.kind) << " discrepancy " << rep.discrepancy << " (N=" << rep.n << ", s=" << rep.s << ")\n";
      emit(g, rep.to_json(), h.str());
      return 0;
    }

    if (*demmel) {
      const auto rep = pf::demmel_case_study(demmel_eps, demmel_n, rng, demmel_trials, g.threads);
      std::ostringstream h;
      h << "well-separated eigenvectors within 10 delta: " << (rep["well_separated_within_10_delta"].get<bool>() ? "yes" : "no")
        << '\n';
      emit(g, rep, h.str());
      return 0;
    }

    // sample, diag, freq
    const auto a = load_input(matrix_path);
    const auto base = pf::FilterSchedule::paper_formula(a.dim(), delta, nu, a.separation());
    const auto schedule = apply_override(base, override_text);
    pf::IterationOptions it;
    if (budget_bits) it.budget = pf::PrecisionBudget(budget_bits);

    if (*sample) {
      pf::SamplerOptions so;
      so.iteration = it;
      if (max_restarts) so.max_restarts = max_restarts;
      std::optional<pf::EigenDecomposition> truth;
      if (a.dim() <= pf::kSeparationOracleMaxDim) {
        truth = pf::jacobi_eigh(a);
        so.oracle = &*truth;
      }
      try {
        const auto out = pf::sample_eigenvector(a, schedule, rng, so);
        json j{{"schedule", schedule.to_json()}, {"seed", g.seed}, {"outcome", out.to_json(true)}};
        std::ostringstream h;
        h << "residual " << out.residual << " after " << out.restarts << " restarts";
        if (out.matched_index) h << ", nearest eigenvector " << *out.matched_index << " at distance " << *out.matched_distance;
        h << '\n';
        emit(g, j, h.str());
        return 0;
      } catch (const pf::NonConvergenceError& e) {
        emit(g, {{"schedule", schedule.to_json()}, {"seed", g.seed}, {"error", e.what()}, {"best_residual", e.best_residual()}},
             std::string(e.what()) + "\n");
        return kExitNonConvergence;
      }
    }

    if (*diag) {
      pf::DiagOptions dopt;
      dopt.iteration = it;
      std::optional<pf::EigenDecomposition> truth;
      if (a.dim() <= pf::kSeparationOracleMaxDim) {
        truth = pf::jacobi_eigh(a);
        dopt.oracle = &*truth;
      }
      const auto out = pf::diagonalize(a, schedule, rng, max_outer, dopt);
      json j{{"schedule", schedule.to_json()}, {"seed", g.seed}, {"outcome", out.to_json(true)}};
      if (!out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec) throw pf::IoError("cannot create " + out_dir + ": " + ec.message());
        for (std::size_t k = 0; k < out.eigenvectors.size(); ++k)
          pf::save_vector(out_dir + "/eigenvector_" + std::to_string(k) + ".txt", out.eigenvectors[k]);
        std::ofstream summary(out_dir + "/summary.json");
        if (!(summary << j.dump(2) << '\n')) throw pf::IoError("cannot write summary.json");
      }
      std::ostringstream h;
      h << out.eigenvectors.size() << " of " << a.dim() << " eigenvectors in " << out.outer_rounds << " outer rounds\n";
      emit(g, j, h.str());
      return out.converged ? 0 : kExitNonConvergence;
    }

    if (*freq) {
      pf::FrequencyOptions fo;
      fo.threads = g.threads;
      fo.sampler.iteration = it;
      const auto rep = pf::frequency_experiment(a, schedule, trials, rng, fo);
      std::ostringstream h;
      h << "histogram";
      for (const auto& c : rep["histogram"]) h << ' ' << c.get<std::size_t>();
      h << "\nchi-square " << rep["chi_square"].get<double>() << '\n';
      emit(g, rep, h.str());
      return 0;
    }
  } catch (const pf::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const pf::NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const pf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
