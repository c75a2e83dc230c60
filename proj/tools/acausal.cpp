// Command-line front end. Every command is deterministic given its input
// files and flags; randomized commands take their entropy only from an
// explicit --seed. Exit codes: 0 affirmative, 1 negative verdict, 2 input
// error, 3 undecided.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "acausal/core.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kInputError = 2;
constexpr int kUndecided = 3;

std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void emit_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw acausal::ParseError("cannot open output file '" + out_path + "'");
  f << text;
}

void emit_json(const acausal::Json& j, const std::string& out_path) {
  emit_text(j.dump(2) + "\n", out_path);
}

acausal::ProcessMatrix load_process(const std::string& path) {
  return acausal::ProcessMatrix(acausal::operator_from_json(acausal::load_json_file(path)));
}

acausal::SeparabilityOptions solver_options(double tol) {
  acausal::SeparabilityOptions opt;
  opt.tol = tol;
  if (const char* cap = std::getenv("ACAUSAL_MAX_ITER")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end == cap || *end != '\0' || v < 1)
      throw acausal::BadParameter("ACAUSAL_MAX_ITER must be a positive integer");
    opt.max_iter = static_cast<int>(v);
  }
  return opt;
}

// Circuit files are accepted in two shapes: the tagged circuit format and the
// synthesis-result format, which maps onto its measured parallel circuit.
struct LoadedCircuit {
  std::string kind;
  std::optional<acausal::ParallelCircuit> parallel;
  std::optional<acausal::SerialCircuit> serial;
};

LoadedCircuit load_circuit(const std::string& path) {
  const acausal::Json j = acausal::load_json_file(path);
  LoadedCircuit c;
  if (j.contains("kind")) {
    acausal::CircuitFile f = acausal::circuit_from_json(j);
    c.kind = f.kind;
    c.parallel = std::move(f.parallel);
    c.serial = std::move(f.serial);
    return c;
  }
  if (j.contains("initial_state") && j.contains("V")) {
    c.kind = "parallel";
    c.parallel = acausal::to_parallel_circuit(acausal::synthesis_from_json(j));
    return c;
  }
  throw acausal::ParseError("file is neither a circuit nor a synthesis result: '" + path + "'");
}

struct PartyDims {
  int a1 = 0, a2 = 0, b1 = 0, b2 = 0;
};

PartyDims party_dims(const LoadedCircuit& c) {
  PartyDims d;
  if (c.parallel) {
    d.a1 = c.parallel->rho.dim_of("A1");
    d.a2 = c.parallel->v.dim_of("A2");
    d.b1 = c.parallel->rho.dim_of("B1");
    d.b2 = c.parallel->v.dim_of("B2");
  } else {
    d.a1 = c.serial->rho.dim_of("A1");
    d.a2 = c.serial->u.dim_of("A2");
    d.b1 = c.serial->u.dim_of("A2");
    d.b2 = c.serial->v.dim_of("B2");
  }
  return d;
}

int cmd_validate(const std::string& path, double tol, const std::string& out) {
  const acausal::ProcessMatrix w = load_process(path);
  const acausal::ValidityReport rep = acausal::is_valid(w, tol);
  acausal::Json j = acausal::to_json(rep);
  j["input"] = path;
  j["tol"] = tol;
  emit_json(j, out);
  return rep.ok ? kOk : kNegative;
}

int cmd_separability(const std::string& path, double tol, const std::string& out) {
  const acausal::ProcessMatrix w = load_process(path);
  acausal::SeparabilityVerdict v;
  try {
    v = acausal::is_causally_separable(w, solver_options(tol));
  } catch (const acausal::InvalidProcessMatrix& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  acausal::Json j = acausal::to_json(v);
  j["input"] = path;
  j["tol"] = tol;
  emit_json(j, out);
  switch (v.status) {
    case acausal::SeparabilityStatus::separable:
      return kOk;
    case acausal::SeparabilityStatus::non_separable:
      return kNegative;
    default:
      return kUndecided;
  }
}

int cmd_synthesize(const std::string& path, std::optional<double> alpha, double tol,
                   const std::string& out) {
  const acausal::ProcessMatrix w = load_process(path);
  const acausal::ValidityReport rep = acausal::is_valid(w, tol);
  if (!rep.ok) {
    std::cerr << "error: input is not a valid process matrix (psd " << rep.psd_residual
              << ", forbidden " << rep.forbidden_term_norm << ")\n";
    return kInputError;
  }
  const acausal::SynthesisResult res = acausal::synthesize(w, alpha);
  std::cerr << "p_succ = " << format_g17(res.p_succ)
            << "  lambda_max = " << format_g17(res.lambda_max)
            << "  alpha = " << format_g17(res.alpha) << "\n";
  emit_json(acausal::to_json(res), out);
  return kOk;
}

int cmd_simulate(const std::string& path, std::uint64_t seed, int n_instruments, int outcome,
                 double tol, const std::string& out, const std::string& format) {
  const LoadedCircuit c = load_circuit(path);
  const PartyDims d = party_dims(c);
  const acausal::Instrument jA =
      acausal::random_instrument(d.a1, d.a2, 2, seed, "A2", "A1");
  const acausal::Instrument jB =
      acausal::random_instrument(d.b1, d.b2, 2, seed + 1, "B2", "B1");

  const acausal::JointTable table = c.parallel
                                        ? acausal::brute_force_joint(*c.parallel, jA, jB)
                                        : acausal::brute_force_joint(*c.serial, jA, jB);
  if (outcome < 0 || outcome >= table.n_mu)
    throw acausal::BadParameter("no such outcome: " + std::to_string(outcome));

  acausal::ConditionedBranch branch;
  try {
    branch = c.parallel ? acausal::parallel_process_matrix(*c.parallel, outcome)
                        : acausal::serial_branch(*c.serial, outcome);
  } catch (const acausal::NullOutcome& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNegative;
  }
  const acausal::ProperReport proper =
      c.parallel ? acausal::is_proper(*c.parallel, outcome, n_instruments, seed, tol)
                 : acausal::is_proper(*c.serial, outcome, n_instruments, seed, tol);

  if (format == "csv") {
    std::string text = "i,j,mu,p\n";
    for (int i = 0; i < table.n_a; ++i)
      for (int j = 0; j < table.n_b; ++j)
        for (int mu = 0; mu < table.n_mu; ++mu)
          text += std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(mu) +
                  "," + format_g17(table.at(i, j, mu)) + "\n";
    emit_text(text, out);
    return kOk;
  }

  acausal::Json j;
  j["input"] = path;
  j["kind"] = c.kind;
  j["seed"] = seed;
  j["n_instruments"] = n_instruments;
  j["outcome"] = outcome;
  j["table"] = acausal::Json::array();
  for (int i = 0; i < table.n_a; ++i)
    for (int jj = 0; jj < table.n_b; ++jj)
      for (int mu = 0; mu < table.n_mu; ++mu) {
        acausal::Json row;
        row["i"] = i;
        row["j"] = jj;
        row["mu"] = mu;
        row["p"] = table.at(i, jj, mu);
        j["table"].push_back(std::move(row));
      }
  j["p_mu"] = acausal::Json::array();
  for (int mu = 0; mu < table.n_mu; ++mu) j["p_mu"].push_back(table.p_mu(mu));
  j["branch_p"] = branch.p;
  j["branch_valid"] = branch.valid;
  j["w_mu"] = acausal::to_json(branch.w);
  j["proper"] = proper.proper;
  j["proper_max_dev"] = proper.max_dev;
  j["proper_mean"] = proper.mean;
  j["structural_residual"] = proper.structural_residual;
  emit_json(j, out);
  return kOk;
}

int cmd_sweep_noise(double gamma_from, double gamma_to, int steps, double tol,
                    const std::string& out, const std::string& format) {
  if (!(gamma_from >= 0.0) || !(gamma_from < gamma_to) || steps < 2) {
    std::cerr << "error: need 0 <= gamma-from < gamma-to and steps >= 2\n";
    return kInputError;
  }
  struct Row {
    double gamma = 0.0, lambda_max = 0.0, p_succ = 0.0;
    std::string status;
  };
  const acausal::SeparabilityOptions opt = solver_options(tol);
  // Grid points evaluate concurrently; the report is assembled in order.
  std::vector<std::future<Row>> futures;
  for (int k = 0; k < steps; ++k) {
    const double gamma =
        gamma_from + (gamma_to - gamma_from) * static_cast<double>(k) / (steps - 1);
    futures.push_back(std::async(std::launch::async, [gamma, opt] {
      Row r;
      r.gamma = gamma;
      const acausal::ProcessMatrix w = acausal::noisy_ocb(gamma);
      r.lambda_max = acausal::herm_eig(w.op()).values(0);
      r.p_succ = acausal::success_probability(w, 1.0 / r.lambda_max);
      r.status = acausal::to_string(acausal::is_causally_separable(w, opt).status);
      return r;
    }));
  }
  std::vector<Row> rows;
  rows.reserve(futures.size());
  for (auto& f : futures) rows.push_back(f.get());

  if (format == "json") {
    acausal::Json j = acausal::Json::array();
    for (const auto& r : rows) {
      acausal::Json e;
      e["gamma"] = r.gamma;
      e["lambda_max"] = r.lambda_max;
      e["p_succ"] = r.p_succ;
      e["status"] = r.status;
      j.push_back(std::move(e));
    }
    emit_json(j, out);
    return kOk;
  }
  std::string text = "gamma,lambda_max,p_succ,status\n";
  for (const auto& r : rows)
    text += format_g17(r.gamma) + "," + format_g17(r.lambda_max) + "," +
            format_g17(r.p_succ) + "," + r.status + "\n";
  emit_text(text, out);
  return kOk;
}

int cmd_resources(const std::string& path, std::uint64_t seed, int n_samples, double tol,
                  const std::string& out) {
  const LoadedCircuit c = load_circuit(path);
  acausal::ResourceOptions opt;
  opt.seed = seed;
  opt.n_samples = n_samples;
  opt.separability = solver_options(tol);
  const acausal::ResourceReport rep = c.parallel ? acausal::resource_report(*c.parallel, opt)
                                                 : acausal::resource_report(*c.serial, opt);
  acausal::Json j = acausal::to_json(rep);
  j["input"] = path;
  j["seed"] = seed;
  j["n_samples"] = n_samples;
  emit_json(j, out);
  return kOk;
}

// A three-step chain whose measured wire is a spectator: the environment
// carries Alice's action to Bob, while the mixed spectator s is measured at
// the end. The outcome distribution cannot depend on the instruments.
acausal::SerialCircuit markovian_demo_circuit() {
  using namespace acausal;
  Matrix rho_s(2, 2);
  rho_s << 0.7, 0.0, 0.0, 0.3;
  const LabeledOperator rho =
      tensor(LabeledOperator({{"A1", 2}}, ket_projector(basis_ket(2, 0))),
             tensor(LabeledOperator({{"e", 2}}, ket_projector(basis_ket(2, 0))),
                    LabeledOperator({{"s", 2}}, rho_s)));
  Matrix cnot = Matrix::Zero(4, 4);
  cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1.0;
  const LabeledOperator u =
      tensor(LabeledOperator({{"A2", 2}, {"e", 2}}, cnot), identity_operator({{"s", 2}}));
  const LabeledOperator v =
      tensor(LabeledOperator({{"B2", 2}, {"e", 2}}, cnot), identity_operator({{"s", 2}}));
  std::vector<LabeledOperator> projectors;
  for (int mu = 0; mu < 2; ++mu)
    projectors.push_back(tensor(identity_operator({{"e", 2}}),
                                LabeledOperator({{"s", 2}}, ket_projector(basis_ket(2, mu)))));
  return make_serial_circuit(rho, u, v, std::move(projectors));
}

int cmd_demo(const std::string& topic, std::uint64_t seed, const std::string& out_dir) {
  using namespace acausal;
  if (topic != "ocb") {
    std::cerr << "error: unknown demo topic '" << topic << "'\n";
    return kInputError;
  }
  const std::string dir = out_dir.empty() ? "." : out_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    std::cerr << "error: cannot create directory '" << dir << "': " << ec.message() << "\n";
    return kInputError;
  }
  auto write = [&](const std::string& name, const Json& j) {
    const std::string path = dir + "/" + name;
    write_json_file(path, j);
    std::cout << path << "\n";
  };

  const ProcessMatrix w = ocb_process();
  write("ocb.json", to_json(w.op()));
  write("flat.json", to_json(0.25 * identity_operator(w.op().labels())));
  write("noisy_critical.json", to_json(noisy_ocb(std::sqrt(2.0) - 1.0 - 1e-3).op()));
  write("noisy_10.json", to_json(noisy_ocb(10.0).op()));

  Rng rng(seed);
  write("random_psd.json",
        to_json(LabeledOperator(w.op().labels(), 4.0 * random_density(16, rng))));

  const SynthesisResult res = synthesize(w);
  write("ocb_synthesis.json", to_json(res));
  write("ocb_circuit.json", to_json(to_parallel_circuit(res)));
  write("markov_circuit.json", to_json(markovian_demo_circuit()));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"construct, validate, simulate, and decompose two-party process matrices"};
  app.require_subcommand(1);

  std::string path, out, demo_topic;
  std::string sim_format = "json", sweep_format = "csv";
  double tol = 1e-7;
  double validate_tol = 1e-9;
  std::optional<double> alpha;
  std::uint64_t seed = 0;
  int n_instruments = 100;
  int n_samples = 100;
  int outcome = 0;
  double gamma_from = 0.0, gamma_to = 1.0;
  int steps = 2;

  CLI::App* validate = app.add_subcommand("validate", "check the process-matrix conditions");
  validate->add_option("path", path, "process matrix JSON")->required();
  validate->add_option("--tol", validate_tol, "residual tolerance");
  validate->add_option("--out", out, "write the report here instead of stdout");

  CLI::App* separability =
      app.add_subcommand("separability", "decide causal separability by convex projection");
  separability->add_option("path", path, "process matrix JSON")->required();
  separability->add_option("--tol", tol, "solver tolerance");
  separability->add_option("--out", out, "write the verdict here instead of stdout");

  CLI::App* synthesize =
      app.add_subcommand("synthesize", "build the measured circuit realizing the process");
  synthesize->add_option("path", path, "process matrix JSON")->required();
  synthesize->add_option("--alpha", alpha, "damping rate (default 1/lambda_max)");
  synthesize->add_option("--tol", validate_tol, "validity tolerance");
  synthesize->add_option("--out", out, "write the synthesis result here instead of stdout");

  CLI::App* simulate =
      app.add_subcommand("simulate", "run a circuit against seeded random instruments");
  simulate->add_option("path", path, "circuit or synthesis JSON")->required();
  simulate->add_option("--seed", seed, "instrument seed")->required();
  simulate->add_option("--instruments", n_instruments, "instrument pairs sampled");
  simulate->add_option("--outcome", outcome, "circuit outcome to reconstruct");
  simulate->add_option("--tol", tol, "properness tolerance");
  simulate->add_option("--out", out, "write the report here instead of stdout");
  simulate->add_option("--format", sim_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));

  CLI::App* sweep = app.add_subcommand("sweep-noise",
                                       "scan the noisy family over a mixing-weight grid");
  sweep->add_option("--gamma-from", gamma_from, "grid start")->required();
  sweep->add_option("--gamma-to", gamma_to, "grid end")->required();
  sweep->add_option("--steps", steps, "grid points")->required();
  sweep->add_option("--tol", tol, "solver tolerance");
  sweep->add_option("--out", out, "write the table here instead of stdout");
  sweep->add_option("--format", sweep_format, "csv or json")
      ->check(CLI::IsMember({"json", "csv"}));

  CLI::App* resources =
      app.add_subcommand("resources", "diagnose the entanglement behind a circuit");
  resources->add_option("path", path, "circuit or synthesis JSON")->required();
  resources->add_option("--seed", seed, "branch-sampling seed")->required();
  resources->add_option("--samples", n_samples, "instrument pairs per branch");
  resources->add_option("--tol", tol, "solver tolerance");
  resources->add_option("--out", out, "write the report here instead of stdout");

  CLI::App* demo = app.add_subcommand("demo", "write a fixture set");
  demo->add_option("topic", demo_topic, "fixture set name (ocb)")->required();
  demo->add_option("--seed", seed, "seed for the randomized fixtures")->required();
  demo->add_option("--out", out, "output directory (default .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends exit 0; every flag/usage failure is an input error.
    return app.exit(e) == 0 ? kOk : kInputError;
  }

  try {
    if (*validate) return cmd_validate(path, validate_tol, out);
    if (*separability) return cmd_separability(path, tol, out);
    if (*synthesize) return cmd_synthesize(path, alpha, validate_tol, out);
    if (*simulate)
      return cmd_simulate(path, seed, n_instruments, outcome, tol, out, sim_format);
    if (*sweep) return cmd_sweep_noise(gamma_from, gamma_to, steps, tol, out, sweep_format);
    if (*resources) return cmd_resources(path, seed, n_samples, tol, out);
    if (*demo) return cmd_demo(demo_topic, seed, out);
  } catch (const acausal::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const acausal::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
