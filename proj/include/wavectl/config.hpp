#ifndef WAVECTL_CONFIG_HPP
#define WAVECTL_CONFIG_HPP

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wavectl/common.hpp"
#include "wavectl/observability.hpp"
#include "wavectl/solver.hpp"
#include "wavectl/uniqcont.hpp"

namespace wavectl
{
    // Config ingestion, report assembly and CSV emission. JSON in, JSON +
    // CSV out; every report embeds the tolerance set and an input hash so
    // certificates are self-describing and reruns are diffable.

    using nlohmann::json;

    struct Tolerances
    {
        double tau_eig = kTauEig;
        double tau_rank = kTauRank;
        double tau_phi = kTauPhi;
        double tau_spec = kTauSpec;
        double quad_tol = 1e-10;
        double picard_tol = 1e-10;
    };

    struct GridConfig
    {
        int x_nodes = 256;
        int obs_grid = 513;
        int nystrom_n = 64;
        double fattorini_re_max = 10.0;
        double fattorini_im_max = 20.0;
        int fattorini_re_points = 41;
        int fattorini_im_points = 81;
    };

    struct RunConfig
    {
        SystemSpec spec;
        std::vector<std::string> analyses; // simulate, observability, unique-continuation,
                                           // fattorini, fredholm, compactness
        GridConfig grids;
        Tolerances tol;
        std::string out_dir = ".";
        std::string raw_text; // for the input hash
    };

    class ConfigError : public Error
    {
    public:
        ConfigError(const std::string& msg, std::string field)
            : Error(msg), field(std::move(field)) {}
        std::string field;
    };

    namespace detail
    {
        inline double require_number(const json& j, const std::string& path)
        {
            if (!j.is_number())
                throw ConfigError("expected a number at " + path, path);
            return j.get<double>();
        }

        inline Expr parse_expr_field(const json& j, const std::string& path)
        {
            if (j.is_number()) return Expr::constant(j.get<double>());
            if (!j.is_string())
                throw ConfigError("expected an expression string at " + path, path);
            try
            {
                return Expr::parse(j.get<std::string>());
            }
            catch (const ParseError& e)
            {
                throw ConfigError(std::string("bad expression at ") + path + ": " + e.what(),
                                  path);
            }
        }
    } // namespace detail

    inline RunConfig load_config(const std::string& text)
    {
        json j;
        try
        {
            j = json::parse(text);
        }
        catch (const json::exception& e)
        {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what(), "");
        }

        RunConfig cfg;
        cfg.raw_text = text;
        if (!j.contains("system")) throw ConfigError("missing field: system", "system");
        const json& sys = j["system"];
        if (!sys.contains("M") || !sys["M"].is_array() || sys["M"].size() != 2 ||
            !sys["M"][0].is_array() || sys["M"][0].size() != 2 || sys["M"][1].size() != 2)
            throw ConfigError("system.M must be a 2x2 array", "system.M");
        cfg.spec.M.a11 = detail::require_number(sys["M"][0][0], "system.M[0][0]");
        cfg.spec.M.a12 = detail::require_number(sys["M"][0][1], "system.M[0][1]");
        cfg.spec.M.a21 = detail::require_number(sys["M"][1][0], "system.M[1][0]");
        cfg.spec.M.a22 = detail::require_number(sys["M"][1][1], "system.M[1][1]");
        if (!sys.contains("B") || !sys["B"].is_array() || sys["B"].size() != 2)
            throw ConfigError("system.B must be a 2-vector", "system.B");
        cfg.spec.B.x = detail::require_number(sys["B"][0], "system.B[0]");
        cfg.spec.B.y = detail::require_number(sys["B"][1], "system.B[1]");
        if (!sys.contains("a")) throw ConfigError("missing field: system.a", "system.a");
        if (!sys.contains("b")) throw ConfigError("missing field: system.b", "system.b");
        cfg.spec.a = detail::parse_expr_field(sys["a"], "system.a");
        cfg.spec.b = detail::parse_expr_field(sys["b"], "system.b");
        if (!sys.contains("T")) throw ConfigError("missing field: system.T", "system.T");
        cfg.spec.T = detail::require_number(sys["T"], "system.T");
        if (!(cfg.spec.T > 0.0)) throw ConfigError("system.T must be positive", "system.T");

        if (j.contains("analyses"))
        {
            if (!j["analyses"].is_array())
                throw ConfigError("analyses must be an array of strings", "analyses");
            for (const auto& a : j["analyses"]) cfg.analyses.push_back(a.get<std::string>());
        }
        if (j.contains("grids"))
        {
            const json& g = j["grids"];
            if (g.contains("x_nodes")) cfg.grids.x_nodes = g["x_nodes"].get<int>();
            if (g.contains("obs_grid")) cfg.grids.obs_grid = g["obs_grid"].get<int>();
            if (g.contains("nystrom_n")) cfg.grids.nystrom_n = g["nystrom_n"].get<int>();
            if (g.contains("fattorini_re_max"))
                cfg.grids.fattorini_re_max = g["fattorini_re_max"].get<double>();
            if (g.contains("fattorini_im_max"))
                cfg.grids.fattorini_im_max = g["fattorini_im_max"].get<double>();
            if (g.contains("fattorini_re_points"))
                cfg.grids.fattorini_re_points = g["fattorini_re_points"].get<int>();
            if (g.contains("fattorini_im_points"))
                cfg.grids.fattorini_im_points = g["fattorini_im_points"].get<int>();
            if (cfg.grids.x_nodes < 8) throw ConfigError("grids.x_nodes too small", "grids.x_nodes");
            if (cfg.grids.nystrom_n < 8)
                throw ConfigError("grids.nystrom_n too small", "grids.nystrom_n");
        }
        if (j.contains("tolerances"))
        {
            const json& t = j["tolerances"];
            auto pick = [&](const char* name, double& slot)
            {
                if (t.contains(name))
                {
                    slot = t[name].get<double>();
                    if (!(slot > 0.0))
                        throw ConfigError(std::string("tolerances.") + name + " must be positive",
                                          std::string("tolerances.") + name);
                }
            };
            pick("tau_eig", cfg.tol.tau_eig);
            pick("tau_rank", cfg.tol.tau_rank);
            pick("tau_phi", cfg.tol.tau_phi);
            pick("tau_spec", cfg.tol.tau_spec);
            pick("quad_tol", cfg.tol.quad_tol);
            pick("picard_tol", cfg.tol.picard_tol);
        }
        if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
        return cfg;
    }

    inline RunConfig load_config_file(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path, "");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return load_config(text);
    }

    inline std::uint64_t fnv1a(const std::string& s)
    {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : s)
        {
            h ^= c;
            h *= 1099511628211ull;
        }
        return h;
    }

    // ------------------------------------------------------------- CSV output

    namespace detail
    {
        inline void put17(std::ostream& os, double v)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << buf;
        }
    }

    inline void emit_field_csv(std::ostream& os, const Field& f)
    {
        os << "t,x,p1,p2,q1,q2\n";
        const int N = f.nx();
        for (int k = 0; k <= f.nt(); ++k)
            for (int j = 0; j <= N; ++j)
            {
                detail::put17(os, f.time(k));
                os << ',';
                detail::put17(os, double(j) / N);
                os << ',';
                detail::put17(os, f.at(k).p[j].x);
                os << ',';
                detail::put17(os, f.at(k).p[j].y);
                os << ',';
                detail::put17(os, f.at(k).q[j].x);
                os << ',';
                detail::put17(os, f.at(k).q[j].y);
                os << '\n';
            }
    }

    inline void emit_trace_csv(std::ostream& os, const Trace& tr)
    {
        os << "t,value\n";
        for (const auto& s : tr.samples)
        {
            detail::put17(os, s.t);
            os << ',';
            detail::put17(os, s.value);
            os << '\n';
        }
    }

    inline void emit_singular_values_csv(std::ostream& os, const Eigen::VectorXd& sv)
    {
        os << "sigma\n";
        for (int i = 0; i < sv.size(); ++i)
        {
            detail::put17(os, sv(i));
            os << '\n';
        }
    }

    inline void emit_state_csv(std::ostream& os, const StateH& z)
    {
        os << "x,p1,p2,q1,q2\n";
        const int N = z.nx();
        for (int j = 0; j <= N; ++j)
        {
            detail::put17(os, double(j) / N);
            os << ',';
            detail::put17(os, z.p[j].x);
            os << ',';
            detail::put17(os, z.p[j].y);
            os << ',';
            detail::put17(os, z.q[j].x);
            os << ',';
            detail::put17(os, z.q[j].y);
            os << '\n';
        }
    }

    // ------------------------------------------------------- JSON serializers

    inline json to_json(const ObsCertificate& c)
    {
        json j;
        j["verdict"] = to_string(c.verdict);
        j["T"] = c.T;
        j["parity"] = c.parity;
        j["grid"] = c.grid_points;
        j["rank"] = c.rank;
        j["tau_phi"] = c.tau_phi;
        j["min_margin"] = c.min_margin;
        j["tolerance_sensitive"] = c.tolerance_sensitive;
        if (c.failure)
        {
            j["failure"] = {{"x", c.failure->x},
                            {"arg", c.failure->arg},
                            {"condition", c.failure->condition}};
        }
        j["conditions"] = json::array();
        for (const auto& cond : c.conditions)
        {
            json jc;
            jc["name"] = cond.name;
            jc["x_range"] = {cond.x_lo, cond.x_hi};
            jc["k_range"] = {cond.k_lo, cond.k_hi};
            double worst = std::numeric_limits<double>::infinity();
            for (double m : cond.margins) worst = std::min(worst, m);
            jc["min_margin"] = worst;
            jc["first_k"] = cond.first_k;
            j["conditions"].push_back(std::move(jc));
        }
        j["has_witness"] = c.witness.has_value();
        return j;
    }

    inline json to_json(const UCVerdict& v)
    {
        json j;
        j["verdict"] = to_string(v.result);
        j["regime"] = v.regime;
        j["margin"] = v.margin;
        j["window"] = v.window;
        if (v.k >= 0) j["k"] = v.k;
        if (v.l >= 0) j["l"] = v.l;
        if (v.n1 >= 0) j["n1"] = v.n1;
        if (v.n2 >= 0) j["n2"] = v.n2;
        if (!v.note.empty()) j["note"] = v.note;
        j["eigs_near_1"] = json::array();
        for (const auto& e : v.eigs_near_1)
            j["eigs_near_1"].push_back({{"re", e.real()}, {"im", e.imag()}});
        return j;
    }

    inline json to_json(const FattoriniReport& r)
    {
        json j = to_json(r.verdict);
        j["min_sigma4"] = r.min_sigma4;
        j["argmin"] = {{"re", r.argmin.real()}, {"im", r.argmin.imag()}};
        j["dips"] = json::array();
        for (const auto& d : r.dips) j["dips"].push_back({{"re", d.real()}, {"im", d.imag()}});
        return j;
    }
} // namespace wavectl

#endif
