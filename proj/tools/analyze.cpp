// Batch analysis driver: reads a JSON system description, runs the selected
// analyses and writes a JSON report plus CSV traces.
//
//   analyze config.json --all --out results/
//   analyze config.json --observability --uc
//
// Exit codes: 0 done, 2 bad config, 3 numerical failure (partial report is
// still written).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "wavectl/config.hpp"
#include "wavectl/observability.hpp"
#include "wavectl/solver.hpp"
#include "wavectl/uniqcont.hpp"

namespace fs = std::filesystem;
using namespace wavectl;

namespace
{
    constexpr const char* kVersion = "wavectl 0.1.0";

    StateH default_initial_data(int nx)
    {
        // smooth, boundary compatible, mean-zero by p = q
        StateH z = StateH::zero(nx);
        for (int j = 0; j <= nx; ++j)
        {
            const double x = double(j) / nx;
            z.p[j] = {std::sin(2.0 * M_PI * x), std::sin(M_PI * x)};
            z.q[j] = z.p[j];
        }
        return z;
    }

    StateH initial_data_from_config(const std::string& raw, int nx)
    {
        json j = json::parse(raw);
        if (!j.contains("initial")) return default_initial_data(nx);
        const json& ini = j["initial"];
        auto component = [&](const char* name) -> std::pair<Expr, Expr>
        {
            if (!ini.contains(name))
                throw ConfigError(std::string("initial.") + name + " missing", name);
            const json& arr = ini[name];
            if (!arr.is_array() || arr.size() != 2)
                throw ConfigError(std::string("initial.") + name + " must hold two expressions",
                                  name);
            return {Expr::parse(arr[0].get<std::string>()),
                    Expr::parse(arr[1].get<std::string>())};
        };
        auto [p1, p2] = component("p0");
        auto [q1, q2] = component("q0");
        StateH z = StateH::zero(nx);
        for (int j = 0; j <= nx; ++j)
        {
            const double x = double(j) / nx;
            z.p[j] = {p1.eval(0.0, x), p2.eval(0.0, x)};
            z.q[j] = {q1.eval(0.0, x), q2.eval(0.0, x)};
        }
        return z;
    }

    void write_text(const fs::path& p, const std::string& text)
    {
        std::ofstream out(p);
        if (!out) throw Error("cannot write " + p.string());
        out << text;
    }

    json run_simulate(const RunConfig& cfg, const fs::path& out)
    {
        const int nx = cfg.grids.x_nodes;
        StateH z0 = initial_data_from_config(cfg.raw_text, nx);
        Field diag = solve_diag(cfg.spec, z0, 0.0, nx);
        Field full = solve_full(cfg.spec, z0, nx, cfg.tol.picard_tol);
        Trace tr = trace_diag(cfg.spec, z0, 0.0, nx);

        {
            std::ofstream os(out / "field_diag.csv");
            emit_field_csv(os, diag);
        }
        {
            std::ofstream os(out / "field_full.csv");
            emit_field_csv(os, full);
        }
        {
            std::ofstream os(out / "trace_diag.csv");
            emit_trace_csv(os, tr);
        }
        json j;
        j["x_nodes"] = nx;
        j["trace_max"] = tr.max_abs();
        j["files"] = {"field_diag.csv", "field_full.csv", "trace_diag.csv"};
        return j;
    }

    json run_observability(const RunConfig& cfg, const fs::path& out)
    {
        ObsCertificate cert = check_weak_observability(cfg.spec, cfg.spec.T, cfg.grids.obs_grid,
                                                       cfg.tol.tau_phi, cfg.grids.x_nodes);
        json j = to_json(cert);
        if (cert.witness)
        {
            std::ofstream os(out / "witness.csv");
            emit_state_csv(os, *cert.witness);
            j["witness_file"] = "witness.csv";
        }
        const double smin = svd_observability_constant(cfg.spec, cfg.spec.T, cfg.grids.x_nodes);
        j["sigma_min"] = smin;
        if (smin > 0.0) j["discrete_observability_constant"] = 1.0 / (smin * smin);
        return j;
    }

    json run_uc(const RunConfig& cfg, const fs::path&)
    {
        const SystemSpec& s = cfg.spec;
        const bool const_a = !s.a.depends_on_t() && !s.a.depends_on_x();
        const bool const_b = !s.b.depends_on_t() && !s.b.depends_on_x();
        if (const_a && const_b)
            return to_json(constant_case(s.a.eval(0, 0), s.b.eval(0, 0), s.M, 64,
                                         cfg.tol.tau_spec));
        if (is_cascade(s) && s.T >= 4.0)
            return to_json(cascade_uc(s, s.T, cfg.grids.nystrom_n, cfg.tol.tau_spec,
                                      cfg.tol.tau_phi));
        if (s.fields().autonomous())
        {
            std::vector<std::complex<double>> grid;
            for (double re : linspace(-cfg.grids.fattorini_re_max, cfg.grids.fattorini_re_max,
                                      cfg.grids.fattorini_re_points))
                for (double im : linspace(-cfg.grids.fattorini_im_max, cfg.grids.fattorini_im_max,
                                          cfg.grids.fattorini_im_points))
                    grid.emplace_back(re, im);
            return to_json(fattorini_scan(s, grid, cfg.tol.quad_tol, cfg.tol.tau_spec));
        }
        json j;
        j["verdict"] = "inconclusive";
        j["note"] = "no decision procedure covers time-dependent coefficients with a "
                    "non-cascade coupling matrix";
        return j;
    }

    json run_fattorini(const RunConfig& cfg, const fs::path&)
    {
        std::vector<std::complex<double>> grid;
        for (double re : linspace(-cfg.grids.fattorini_re_max, cfg.grids.fattorini_re_max,
                                  cfg.grids.fattorini_re_points))
            for (double im : linspace(-cfg.grids.fattorini_im_max, cfg.grids.fattorini_im_max,
                                      cfg.grids.fattorini_im_points))
                grid.emplace_back(re, im);
        return to_json(fattorini_scan(cfg.spec, grid, cfg.tol.quad_tol, cfg.tol.tau_spec));
    }

    json run_fredholm(const RunConfig& cfg, const fs::path&)
    {
        return to_json(cascade_uc(cfg.spec, cfg.spec.T, cfg.grids.nystrom_n, cfg.tol.tau_spec,
                                  cfg.tol.tau_phi));
    }

    json run_compactness(const RunConfig& cfg, const fs::path& out)
    {
        DtMatrixResult r = dt_matrix(cfg.spec, cfg.grids.x_nodes);
        {
            std::ofstream os(out / "dt_singular_values.csv");
            emit_singular_values_csv(os, r.singular_values);
        }
        json j;
        j["sigma_1"] = r.singular_values(0);
        const int k10 = std::min<int>(9, int(r.singular_values.size()) - 1);
        j["sigma_10_over_sigma_1"] =
            r.singular_values(0) > 0 ? r.singular_values(k10) / r.singular_values(0) : 0.0;
        j["file"] = "dt_singular_values.csv";
        return j;
    }
} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"boundary controllability analyses for coupled 1-D wave pairs"};
    std::string config_path, out_dir;
    bool all = false, obs = false, uc = false, fat = false, sim = false, comp = false,
         fred = false, dump_phi = false;
    app.add_option("config", config_path, "JSON system description")->required();
    app.add_flag("--all", all, "run every analysis");
    app.add_flag("--observability", obs, "weak observability certificate");
    app.add_flag("--uc", uc, "unique continuation (regime dispatched)");
    app.add_flag("--fattorini", fat, "frequency-domain rank scan");
    app.add_flag("--fredholm", fred, "cascade integral-equation criterion");
    app.add_flag("--simulate", sim, "solve and dump fields/traces");
    app.add_flag("--compactness", comp, "difference-operator singular values");
    app.add_flag("--dump-phi", dump_phi, "dump the cached line-integral table");
    app.add_option("--out", out_dir, "output directory (default from config)");
    CLI11_PARSE(app, argc, argv);

    RunConfig cfg;
    try
    {
        cfg = load_config_file(config_path);
    }
    catch (const ConfigError& e)
    {
        std::cerr << "config error";
        if (!e.field.empty()) std::cerr << " [" << e.field << "]";
        std::cerr << ": " << e.what() << "\n";
        return 2;
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    std::vector<std::string> selected = cfg.analyses;
    auto add = [&](bool flag, const char* name)
    {
        if (flag) selected.push_back(name);
    };
    add(obs, "observability");
    add(uc, "unique-continuation");
    add(fat, "fattorini");
    add(fred, "fredholm");
    add(sim, "simulate");
    add(comp, "compactness");
    if (all)
        selected = {"simulate", "observability", "unique-continuation", "compactness"};
    if (selected.empty())
    {
        std::cerr << "nothing to do: pass --all or an analysis flag\n";
        return 2;
    }

    fs::path out(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);

    json report;
    report["version"] = kVersion;
    {
        char hex[32];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(fnv1a(cfg.raw_text)));
        report["input_hash"] = hex;
    }
    report["config"] = json::parse(cfg.raw_text);
    report["results"] = json::object();

    int status = 0;
    const auto t_start = std::chrono::steady_clock::now();
    for (const std::string& name : selected)
    {
        const auto t0 = std::chrono::steady_clock::now();
        try
        {
            if (name == "simulate") report["results"][name] = run_simulate(cfg, out);
            else if (name == "observability") report["results"][name] = run_observability(cfg, out);
            else if (name == "unique-continuation") report["results"][name] = run_uc(cfg, out);
            else if (name == "fattorini") report["results"][name] = run_fattorini(cfg, out);
            else if (name == "fredholm") report["results"][name] = run_fredholm(cfg, out);
            else if (name == "compactness") report["results"][name] = run_compactness(cfg, out);
            else
            {
                std::cerr << "unknown analysis: " << name << "\n";
                return 2;
            }
        }
        catch (const ConfigError& e)
        {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        }
        catch (const Error& e)
        {
            report["results"][name] = {{"error", e.what()}};
            status = 3;
        }
        const auto t1 = std::chrono::steady_clock::now();
        report["timing"][name] =
            std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count() / 1000.0;
    }
    if (dump_phi)
    {
        PhiTable tab(cfg.spec.fields(), cfg.tol.quad_tol);
        for (double t : linspace(0.0, cfg.spec.T, 65)) tab.phi(t);
        std::ofstream os(out / "phi_table.csv");
        tab.dump_csv(os);
    }
    const auto t_end = std::chrono::steady_clock::now();
    report["timing"]["total"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t_end - t_start).count() / 1000.0;

    write_text(out / "report.json", report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
    return status;
}
