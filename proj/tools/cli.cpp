#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pidkit/io.hpp"
#include "pidkit/random.hpp"
#include "pidkit/seesaw.hpp"
#include "pidkit/sem.hpp"

namespace pidkit::cli {

using nlohmann::json;

namespace {

struct Globals {
  double tol = 1e-9;
  int max_iter = 200;
  std::uint64_t seed = 1;
  bool json_errors = false;
};

CompatOptions compat(const Globals& g) {
  CompatOptions o;
  o.solver.feas_tol = g.tol;
  o.solver.gap_tol = g.tol;
  o.solver.max_iter = g.max_iter;
  return o;
}

json real_vector(const RVector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

// Writes a device to `path`, or to stdout when no path is given.
void emit_device(std::ostream& out, const DeviceFile& f, const std::string& path, json summary) {
  if (path.empty()) {
    out << serialize_device(f);
    return;
  }
  save_device(path, f);
  summary["written"] = path;
  emit(out, summary);
}

json validation_report(const DeviceFile& f, bool& valid) {
  json r;
  r["kind"] = f.kind();
  auto set = [&](double defect, double tol) {
    r["defect"] = defect;
    r["tolerance"] = tol;
    valid = defect <= tol;
  };
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Pid>) {
          PidValidation pv = validate_pid(v);
          r["cp_defect"] = pv.cp_defect;
          r["tp_defect"] = pv.tp_defect;
          r["nonsignaling_defect"] = pv.nonsignaling_defect;
          r["message"] = pv.message;
          valid = pv.valid;
        } else if constexpr (std::is_same_v<T, Pmd> || std::is_same_v<T, Povm> ||
                             std::is_same_v<T, Instrument>) {
          set(v.defect(), kTpTol);
        } else if constexpr (std::is_same_v<T, ChoiMatrix>) {
          double cp = std::max(0.0, -min_eigenvalue(v.mat()));
          double tp = (v.marginal() - CMatrix::Identity(v.din(), v.din())).cwiseAbs().maxCoeff();
          r["cp_defect"] = cp;
          r["tp_defect"] = tp;
          valid = cp <= kCpTol && tp <= kTpTol;
        } else if constexpr (std::is_same_v<T, GameSpec> || std::is_same_v<T, PiGameSpec>) {
          set(v.defect(), 1e-9);
        } else if constexpr (std::is_same_v<T, FreeSimulation>) {
          v.check();  // shape errors surface as usage errors, physics as a verdict
          set(v.defect(), 1e-8);
        } else if constexpr (std::is_same_v<T, CertificateFile>) {
          set(dual_feasibility_defect(v.witness, v.din, v.dout), 1e-6);
        } else {
          r["defect"] = 0.0;
          valid = true;
        }
      },
      f.value);
  r["valid"] = valid;
  return r;
}

Pid load_pid(const std::string& path) { return expect_kind<Pid>(load_device(path), "pid"); }

// Games built with dummy outcomes accept the device as is; missing outcomes never fire.
Pid padded(const Pid& p, int n_n) { return p.n_outcomes() < n_n ? extend_outcomes(p, n_n) : p; }

std::vector<int> parse_schedule(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--schedule", "not an integer: '" + tok + "'");
    }
    if (used != tok.size() || v <= 0) throw CLI::ValidationError("--schedule", "bad entry '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("--schedule", "empty schedule");
  return out;
}

json certificate_json(const RoiCertificate& c) {
  json j;
  j["r"] = c.r;
  j["dual"] = c.witness.value;
  j["gap"] = c.gap;
  return j;
}

int report_error(std::ostream& err, bool as_json, int code, const std::string& type,
                 const std::string& msg) {
  if (as_json) {
    json e;
    e["error"] = type;
    e["message"] = msg;
    e["exit_code"] = code;
    err << e.dump() << "\n";
  } else {
    err << "pidkit: " << msg << "\n";
  }
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Globals g;
  CLI::App app{"Incompatibility and simulation analysis for programmable instrument devices", "pidkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.add_option("--tol", g.tol, "solver feasibility and gap tolerance")->check(CLI::PositiveNumber);
  app.add_option("--max-iter", g.max_iter, "solver iteration limit")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "random seed");
  app.add_flag("--json", g.json_errors, "machine-readable errors on stderr; JSON report for verify-bound");

  std::function<int()> action;
  auto bind = [&](CLI::App* sub, std::function<int()> f) {
    sub->callback([&action, f] { action = f; });
  };

  // validate
  std::string file_a, file_b, out_path;
  auto* validate = app.add_subcommand("validate", "check a device file");
  validate->add_option("file", file_a)->required();
  bind(validate, [&] {
    DeviceFile f = load_device(file_a);
    bool valid = false;
    emit(out, validation_report(f, valid));
    return valid ? kOk : kNegative;
  });

  // simplicity
  auto* simplicity = app.add_subcommand("simplicity", "decide whether a device is simple");
  simplicity->add_option("pid", file_a)->required();
  bind(simplicity, [&] {
    SimplicityResult r = is_simple_pid(load_pid(file_a), compat(g));
    json j;
    j["simple"] = r.verdict == Verdict::Simple;
    j["roi"] = r.roi;
    if (r.certificate) {
      j["certificate_residual"] = r.certificate->residual;
      j["n_strategies"] = static_cast<int>(r.certificate->strategies.size());
    }
    if (r.witness) j["witness_value"] = r.witness->value;
    emit(out, j);
    return r.verdict == Verdict::Simple ? kOk : kNegative;
  });

  // roi
  bool with_dual = false;
  std::string cert_path;
  auto* roi_cmd = app.add_subcommand("roi", "robustness of incompatibility");
  roi_cmd->add_option("pid", file_a)->required();
  roi_cmd->add_flag("--dual", with_dual, "also solve the dual program");
  roi_cmd->add_option("--certificate", cert_path, "write the dual witness to this file");
  bind(roi_cmd, [&] {
    DeviceFile f = load_device(file_a);
    const Pid& p = expect_kind<Pid>(f, "pid");
    json j;
    if (with_dual || !cert_path.empty()) {
      RoiCertificate c = roi(p, compat(g));
      j = certificate_json(c);
      if (!cert_path.empty()) {
        CertificateFile cf{p.din(), p.dout(), c.r, c.witness.value, c.gap, c.witness};
        save_device(cert_path, DeviceFile{cf, Metadata{f.meta.seed, "dual witness"}});
        j["certificate"] = cert_path;
      }
    } else {
      RoiPrimal r = roi_primal(p, compat(g));
      if (r.status != sdp::SdpStatus::Optimal)
        throw NumericalError(std::string("roi: solver returned ") + sdp::to_string(r.status));
      j["r"] = r.r;
      j["iterations"] = r.iterations;
    }
    emit(out, j);
    return kOk;
  });

  // sem
  auto* sem_cmd = app.add_subcommand("sem", "steering-equivalent measurement device");
  sem_cmd->add_option("pid", file_a)->required();
  sem_cmd->add_option("--out", out_path, "write the measurement device here");
  bind(sem_cmd, [&] {
    DeviceFile f = load_device(file_a);
    SemResult s = sem(expect_kind<Pid>(f, "pid"));
    json j;
    j["rank"] = s.rank;
    j["eigenvalues"] = real_vector(s.values);
    j["cutoff"] = s.cutoff;
    if (!s.warning.empty()) j["warning"] = s.warning;
    emit_device(out, DeviceFile{s.pmd, Metadata{f.meta.seed, "steering-equivalent measurement"}},
                out_path, j);
    return kOk;
  });

  // steer
  auto* steer_cmd = app.add_subcommand("steer", "steer a broadcast channel with a measurement device");
  steer_cmd->add_option("channel", file_a)->required();
  steer_cmd->add_option("pmd", file_b)->required();
  steer_cmd->add_option("--out", out_path);
  bind(steer_cmd, [&] {
    const ChoiMatrix e = expect_kind<ChoiMatrix>(load_device(file_a), "channel");
    const Pmd m = expect_kind<Pmd>(load_device(file_b), "pmd");
    if (e.dout() % m.dim != 0) throw DimensionError("steer: channel output is not A1 (x) E for this measurement");
    Pid p = steer(e, e.dout() / m.dim, m);
    json j;
    j["n_programs"] = p.n_programs();
    j["n_outcomes"] = p.n_outcomes();
    emit_device(out, DeviceFile{p, Metadata{}}, out_path, j);
    return kOk;
  });

  // simulate
  auto* simulate = app.add_subcommand("simulate", "apply a free simulation to a device");
  simulate->add_option("simulation", file_a)->required();
  simulate->add_option("pid", file_b)->required();
  simulate->add_option("--out", out_path);
  bind(simulate, [&] {
    const FreeSimulation s = expect_kind<FreeSimulation>(load_device(file_a), "simulation");
    s.check();
    Pid p = apply_free_simulation(s, load_pid(file_b));
    json j;
    j["n_programs"] = p.n_programs();
    j["n_outcomes"] = p.n_outcomes();
    emit_device(out, DeviceFile{p, Metadata{}}, out_path, j);
    return kOk;
  });

  // game-value
  auto* game_value_cmd = app.add_subcommand("game-value", "score of a device in a guessing game");
  game_value_cmd->add_option("game", file_a)->required();
  game_value_cmd->add_option("pid", file_b)->required();
  bind(game_value_cmd, [&] {
    const GameSpec gs = expect_kind<GameSpec>(load_device(file_a), "game");
    json j;
    j["value"] = game_value(gs, padded(load_pid(file_b), gs.n_n));
    emit(out, j);
    return kOk;
  });

  // pguess-simple
  auto* pguess = app.add_subcommand("pguess-simple", "best score of a simple device");
  pguess->add_option("game", file_a)->required();
  bind(pguess, [&] {
    SimpleOptimum o = pguess_simple_full(expect_kind<GameSpec>(load_device(file_a), "game"), compat(g));
    json j;
    j["value"] = o.value;
    j["n_blocks"] = o.n_blocks;
    emit(out, j);
    return kOk;
  });

  // witness
  int n_dummy = 64;
  auto* witness = app.add_subcommand("witness", "guessing game built from the dual witness");
  witness->add_option("pid", file_a)->required();
  witness->add_option("--dummy", n_dummy, "number of dummy outcomes")->check(CLI::PositiveNumber);
  witness->add_option("--out", out_path);
  bind(witness, [&] {
    DeviceFile f = load_device(file_a);
    const Pid& p = expect_kind<Pid>(f, "pid");
    RoiCertificate c = roi(p, compat(g));
    GameSpec gs = witness_game(c, p.din(), p.dout(), n_dummy);
    json j = certificate_json(c);
    j["c"] = witness_norm(c.witness);
    j["n_dummy"] = n_dummy;
    emit_device(out, DeviceFile{gs, Metadata{f.meta.seed, "witness game"}}, out_path, j);
    return kOk;
  });

  // verify-bound
  std::string schedule = "8,64,512", csv_path;
  bool use_seesaw = false;
  int restarts = 2, iters = 10;
  auto* verify = app.add_subcommand("verify-bound", "witness-game ratios against 1 + roi");
  verify->add_option("pid", file_a)->required();
  verify->add_option("--schedule", schedule, "comma separated dummy counts");
  verify->add_option("--csv", csv_path, "also write the table here");
  verify->add_flag("--seesaw", use_seesaw, "search strategies beyond the device itself");
  verify->add_option("--restarts", restarts)->check(CLI::PositiveNumber);
  verify->add_option("--iters", iters)->check(CLI::PositiveNumber);
  bind(verify, [&] {
    BoundOptions bo;
    bo.compat = compat(g);
    bo.seesaw = use_seesaw;
    bo.seesaw_restarts = restarts;
    bo.seesaw_iters = iters;
    bo.seed = g.seed;
    BoundReport r = verify_robustness_bound(load_pid(file_a), parse_schedule(schedule), bo);
    CsvTable t = bound_table(r);
    if (!csv_path.empty()) {
      std::ofstream f(csv_path);
      if (!f) throw FormatError("cannot write " + csv_path);
      f << t.str();
    }
    if (g.json_errors) {
      json j;
      j["roi"] = r.roi;
      j["dual"] = r.dual;
      j["c"] = r.c;
      j["cap_violations"] = r.cap_violations;
      j["monotone"] = r.monotone;
      j["points"] = json::array();
      for (const auto& pt : r.points)
        j["points"].push_back({{"n_dummy", pt.n_dummy},
                               {"ratio", pt.ratio},
                               {"lower_bound", pt.lower_bound},
                               {"identity_value", pt.identity_value},
                               {"seesaw_value", pt.seesaw_value},
                               {"pguess_simple", pt.pguess_simple}});
      emit(out, j);
    } else {
      out << t.str();
    }
    return r.cap_violations == 0 && r.monotone ? kOk : kNegative;
  });

  // sample
  std::string sample_kind;
  int din = 2, dout = 2, n_programs = 2, n_outcomes = 2;
  PidSampling sampling;
  SimulationShape shape;
  auto* sample = app.add_subcommand("sample", "draw a random device or simulation");
  sample->add_option("kind", sample_kind)->required()->check(CLI::IsMember({"pid", "simple-pid", "simulation"}));
  sample->add_option("--din", din)->check(CLI::PositiveNumber);
  sample->add_option("--dout", dout)->check(CLI::PositiveNumber);
  sample->add_option("--programs", n_programs)->check(CLI::PositiveNumber);
  sample->add_option("--outcomes", n_outcomes)->check(CLI::PositiveNumber);
  sample->add_option("--env", sampling.env_dim, "environment dimension (0: max(2, dout))");
  sample->add_option("--effect-rank", sampling.effect_rank, "rank of the steering effects (0: full)");
  sample->add_option("--target-din", shape.d_b0)->check(CLI::PositiveNumber);
  sample->add_option("--target-dout", shape.d_b1)->check(CLI::PositiveNumber);
  sample->add_option("--target-programs", shape.n_y0)->check(CLI::PositiveNumber);
  sample->add_option("--target-outcomes", shape.n_y1)->check(CLI::PositiveNumber);
  sample->add_option("--side", shape.d_side)->check(CLI::PositiveNumber);
  sample->add_option("--out", out_path);
  bind(sample, [&] {
    Metadata meta{g.seed, ""};
    DeviceFile f;
    if (sample_kind == "pid") {
      f = DeviceFile{random_pid(din, dout, n_programs, n_outcomes, g.seed, sampling), meta};
      f.meta.description = "random steered device";
    } else if (sample_kind == "simple-pid") {
      f = DeviceFile{random_simple_pid(din, dout, n_programs, n_outcomes, g.seed).pid, meta};
      f.meta.description = "random simple device";
    } else {
      f = DeviceFile{random_free_simulation(din, dout, n_programs, n_outcomes, shape, g.seed), meta};
      f.meta.description = "random free simulation";
    }
    json j;
    j["kind"] = f.kind();
    j["seed"] = g.seed;
    emit_device(out, f, out_path, j);
    return kOk;
  });

  // pi-value
  auto* pi_value = app.add_subcommand("pi-value", "score of a device in a post-information game");
  pi_value->add_option("pigame", file_a)->required();
  pi_value->add_option("pid", file_b)->required();
  bind(pi_value, [&] {
    const PiGameSpec pg = expect_kind<PiGameSpec>(load_device(file_a), "pigame");
    json j;
    j["value"] = pi_game_value(pg, padded(load_pid(file_b), pg.n_n));
    emit(out, j);
    return kOk;
  });

  // pi-witness
  std::string ic_path;
  auto* pi_witness = app.add_subcommand("pi-witness", "post-information game from a linear functional");
  pi_witness->add_option("source", file_a, "pmd, functional or certificate file")->required();
  pi_witness->add_option("--ic-povm", ic_path, "informationally complete POVM file")->required();
  pi_witness->add_option("--out", out_path);
  bind(pi_witness, [&] {
    const Povm l = expect_kind<Povm>(load_device(ic_path), "povm");
    DeviceFile src = load_device(file_a);
    std::vector<std::vector<CMatrix>> targets;
    int d0 = 0;
    if (const auto* fn = std::get_if<Functional>(&src.value)) {
      if (fn->dout != l.dim) throw DimensionError("functional output dimension differs from the POVM");
      targets = fn->targets;
      d0 = fn->din;
    } else if (const auto* cf = std::get_if<CertificateFile>(&src.value)) {
      if (cf->dout != l.dim) throw DimensionError("certificate output dimension differs from the POVM");
      targets = cf->witness.alpha;
      d0 = cf->din;
    } else if (const auto* m = std::get_if<Pmd>(&src.value)) {
      // A measurement witness acts on the device after its output is discarded.
      RoiPmd rp = roi_pmd(*m, compat(g));
      const CMatrix id = CMatrix::Identity(l.dim, l.dim);
      targets.resize(rp.witness.alpha.size());
      for (size_t x0 = 0; x0 < rp.witness.alpha.size(); ++x0)
        for (const auto& a : rp.witness.alpha[x0]) targets[x0].push_back(kron(a, id));
      d0 = m->dim;
    } else {
      throw FormatError("pi-witness needs a pmd, functional or certificate file, got " + src.kind());
    }
    DualFrame frame = ic_dual_frame(l, targets, d0);
    PiGameSpec pg = witness_ensemble(frame, l);
    json j;
    j["residual"] = frame.residual;
    j["pi_pguess_simple"] = pi_pguess_simple(pg, compat(g));
    emit_device(out, DeviceFile{pg, Metadata{src.meta.seed, "post-information witness game"}}, out_path, j);
    return kOk;
  });

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return report_error(err, g.json_errors, kUsage, "usage", e.what());
  }

  try {
    return action ? action() : kUsage;
  } catch (const FormatError& e) {
    return report_error(err, g.json_errors, kUsage, "format", e.what());
  } catch (const DimensionError& e) {
    return report_error(err, g.json_errors, kUsage, "dimension", e.what());
  } catch (const CLI::ParseError& e) {
    return report_error(err, g.json_errors, kUsage, "usage", e.what());
  } catch (const ValueError& e) {
    return report_error(err, g.json_errors, kNegative, "invalid", e.what());
  } catch (const NumericalError& e) {
    return report_error(err, g.json_errors, kNumerical, "numerical", e.what());
  } catch (const std::exception& e) {
    return report_error(err, g.json_errors, kNumerical, "internal", e.what());
  }
}

}  // namespace pidkit::cli
