#include "bcstab/cli.hpp"

#include "bcstab/config.hpp"
#include "bcstab/errors.hpp"
#include "bcstab/point_io.hpp"
#include "bcstab/solver.hpp"
#include "bcstab/stability.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

namespace bcstab {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string config;
    std::string out = ".";
    std::string point;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    bool quiet = false;
};

struct Instance {
    InstanceConfig cfg;
    std::unique_ptr<DiscreteProblem> dp;
};

/// Invalid configuration or admission failure; maps to exit 2.
struct Invalid {
    std::string message;
};

Instance load_instance(const Options& o)
{
    Instance inst;
    try {
        inst.cfg = load_config(o.config);
        if (o.tol) {
            if (!(*o.tol > 0.0)) throw ConfigError("--tol must be positive");
            inst.cfg.solver.kkt_tol = *o.tol;
        }
        check_admission(inst.cfg.spec);
        auto prob = std::make_shared<const Problem>(inst.cfg.spec);
        inst.dp = std::make_unique<DiscreteProblem>(prob, make_disk_mesh(inst.cfg.n_boundary, inst.cfg.refinement));
    }
    catch (const ConfigError& e) {
        throw Invalid{std::string("invalid instance: ") + e.what()};
    }
    catch (const AdmissionError& e) {
        throw Invalid{std::string("instance rejected: ") + e.what()};
    }
    catch (const EvalError& e) {
        throw Invalid{std::string("instance rejected: ") + e.what()};
    }
    return inst;
}

std::uint64_t ssc_seed(const Options& o, const Instance& inst)
{
    if (o.seed) return *o.seed;
    return inst.cfg.sweep ? inst.cfg.sweep->seed : 1;
}

void write_file(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << text;
}

void emit(std::ostream& out, const Options& o, const nlohmann::json& j)
{
    if (!o.quiet) out << j.dump(2) << "\n";
}

std::optional<SolveResult> base_solve(const Instance& inst, std::ostream& err)
{
    const DiscreteProblem& dp = *inst.dp;
    try {
        return solve(dp, dp.lambda_bar(), Vector::Zero(dp.num_boundary()), inst.cfg.solver);
    }
    catch (const SolveError& e) {
        err << "solve failed at lambda_bar: " << e.what() << "\n";
        return std::nullopt;
    }
}

int cmd_solve(const Options& o, std::ostream& out, std::ostream& err)
{
    const Instance inst = load_instance(o);
    const DiscreteProblem& dp = *inst.dp;
    const auto solved = base_solve(inst, err);
    if (!solved) return kExitSolveFailed;
    const SolveResult& res = *solved;
    const double gap = projection_identity_gap(dp, res.point);
    nlohmann::json j = {{"residuals", to_json(res.residuals)},
                        {"projection_identity_gap", gap},
                        {"sigma1", res.residuals.sigma1},
                        {"iterations", res.iterations},
                        {"cost", cost(dp, res.point.y.values(), res.point.u.values(), dp.lambda_bar())},
                        {"solver", to_json(inst.cfg.solver)},
                        {"mesh", {{"hash", dp.mesh().hash_hex()},
                                  {"vertices", dp.num_vertices()},
                                  {"boundary", dp.num_boundary()}}}};
    std::ostringstream pt;
    write_point(pt, dp, res.point);
    write_file(fs::path(o.out) / "point.txt", pt.str());
    write_file(fs::path(o.out) / "residuals.json", j.dump(2) + "\n");
    emit(out, o, j);
    return res.residuals.within(inst.cfg.solver.kkt_tol) ? kExitOk : kExitSolveFailed;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err)
{
    const Instance inst = load_instance(o);
    const DiscreteProblem& dp = *inst.dp;
    std::ifstream in(o.point);
    if (!in) throw Invalid{"cannot open point file '" + o.point + "'"};
    KktPoint p = [&] {
        try {
            return read_point(in, dp, dp.lambda_bar());
        }
        catch (const std::exception& e) {
            throw Invalid{std::string("point file rejected: ") + e.what()};
        }
    }();
    const KktResiduals r = residuals(dp, p);
    const double gap = projection_identity_gap(dp, p);
    const double tol = inst.cfg.solver.kkt_tol;
    const bool ok = r.within(tol) && gap <= 10.0 * tol;
    emit(out, o,
         {{"residuals", to_json(r)},
          {"projection_identity_gap", gap},
          {"sigma1", r.sigma1},
          {"tolerance", tol},
          {"ok", ok}});
    if (!ok) err << "verification failed: max residual " << r.max() << ", gap " << gap << "\n";
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_ssc(const Options& o, std::ostream& out, std::ostream& err)
{
    const Instance inst = load_instance(o);
    const auto solved = base_solve(inst, err);
    if (!solved) return kExitSolveFailed;
    const SolveResult& res = *solved;
    const SscReport rep = check_ssc(*inst.dp, res.point, inst.cfg.ssc_samples, ssc_seed(o, inst));
    emit(out, o, to_json(rep));
    return rep.min_rayleigh > 0.0 ? kExitOk : kExitCheckFailed;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err)
{
    const Instance inst = load_instance(o);
    const DiscreteProblem& dp = *inst.dp;
    if (!inst.cfg.sweep) throw Invalid{"instance has no [sweep] section"};
    SweepPlan plan;
    try {
        plan = make_plan(dp, inst.cfg.sweep->delta, inst.cfg.sweep->t, inst.cfg.sweep->warm_start);
    }
    catch (const std::exception& e) {
        throw Invalid{std::string("invalid sweep: ") + e.what()};
    }

    const auto solved = base_solve(inst, err);
    if (!solved) return kExitSolveFailed;
    const SolveResult& base = *solved;
    const SscReport ssc = check_ssc(dp, base.point, inst.cfg.ssc_samples, ssc_seed(o, inst));
    if (!(ssc.min_rayleigh > 0.0)) {
        err << "second-order check failed at the reference parameter: min_rayleigh = " << ssc.min_rayleigh << "\n";
        emit(out, o, {{"ssc", to_json(ssc)}});
        return kExitSolveFailed;
    }

    StabilityReport rep;
    try {
        rep = run_sweep(dp, base, plan, inst.cfg.solver);
    }
    catch (const SweepError& e) {
        err << e.what() << "\n";
        return kExitCheckFailed;
    }
    std::ostringstream csv;
    write_csv(csv, rep);
    nlohmann::json j = to_json(rep);
    j["ssc"] = to_json(ssc);
    j["seed"] = ssc_seed(o, inst);
    j["solver"] = to_json(inst.cfg.solver);
    write_file(fs::path(o.out) / "sweep.csv", csv.str());
    write_file(fs::path(o.out) / "sweep.json", j.dump(2) + "\n");
    emit(out, o, j);
    if (!rep.all_ok()) {
        if (!rep.fit_error.empty()) err << "exponent fit failed: " << rep.fit_error << "\n";
        for (const auto& r : rep.rows) {
            if (!r.kkt_ok) err << "row t=" << r.t << " failed: " << r.error << "\n";
        }
        return kExitCheckFailed;
    }
    return kExitOk;
}

int cmd_mesh_dump(const Options& o, std::ostream& out)
{
    InstanceConfig cfg;
    try {
        cfg = load_config(o.config);
    }
    catch (const ConfigError& e) {
        throw Invalid{std::string("invalid instance: ") + e.what()};
    }
    const MeshPtr mesh = make_disk_mesh(cfg.n_boundary, cfg.refinement);
    std::ostringstream os;
    mesh->write_dump(os);
    if (o.out == "-") out << os.str();
    else write_file(fs::path(o.out) / "mesh.txt", os.str());
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"FEM solver and stability harness for boundary control with mixed constraints", "bcstab"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "instance file (INI)")->required();
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", o.seed, "sampling seed");
        sub->add_option("--tol", o.tol, "override [solver] kkt_tol");
        sub->add_flag("--quiet", o.quiet, "suppress JSON on stdout");
    };
    CLI::App* solve_cmd = app.add_subcommand("solve", "compute a KKT point at lambda_bar");
    CLI::App* verify_cmd = app.add_subcommand("verify", "check a stored point against the optimality system");
    CLI::App* ssc_cmd = app.add_subcommand("ssc", "second-order check at the computed point");
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "perturbation sweep lambda_bar + t delta");
    CLI::App* mesh_cmd = app.add_subcommand("mesh-dump", "write the mesh as plain text ('--out -' for stdout)");
    for (CLI::App* sub : {solve_cmd, verify_cmd, ssc_cmd, sweep_cmd, mesh_cmd}) common(sub);
    verify_cmd->add_option("--point", o.point, "point file written by solve")->required();

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    }
    catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kExitInvalid;
    }

    try {
        if (*solve_cmd) return cmd_solve(o, out, err);
        if (*verify_cmd) return cmd_verify(o, out, err);
        if (*ssc_cmd) return cmd_ssc(o, out, err);
        if (*sweep_cmd) return cmd_sweep(o, out, err);
        return cmd_mesh_dump(o, out);
    }
    catch (const Invalid& e) {
        err << e.message << "\n";
        return kExitInvalid;
    }
    catch (const AdmissionError& e) {
        err << "instance rejected: " << e.what() << "\n";
        return kExitInvalid;
    }
    catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitSolveFailed;
    }
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace bcstab
