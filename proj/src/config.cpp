#include "bcstab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bcstab {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys = {
        {"domain", {"n_boundary", "refinement", "r"}},
        {"operator", {"a11", "a12", "a22", "a0", "C0"}},
        {"cost", {"L", "ell", "alpha", "beta", "gamma"}},
        {"state", {"h", "M"}},
        {"constraints", {}},
        {"parameter", {"lambda_bar"}},
        {"solver", {"kkt_tol", "damping", "adaptive", "max_outer", "ssc_samples"}},
        {"sweep", {"delta", "t", "seed", "warm_start"}},
    };
    return keys;
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    [[nodiscard]] bool has_section(const std::string& s) const { return tree_.get_child_optional(s).has_value(); }

    [[nodiscard]] std::optional<std::string> raw(const std::string& section, const std::string& key) const
    {
        auto v = tree_.get_optional<std::string>(section + "." + key);
        if (!v) return std::nullopt;
        return *v;
    }

    [[nodiscard]] Expr expr(const std::string& section, const std::string& key,
                            std::optional<std::string> fallback = std::nullopt) const
    {
        auto src = raw(section, key);
        if (!src) src = fallback;
        if (!src) throw ConfigError("missing [" + section + "] " + key);
        try {
            return parse(*src);
        }
        catch (const ParseError& err) {
            throw ConfigError("[" + section + "] " + key + ": " + err.what());
        }
    }

    template <class T>
    [[nodiscard]] T number(const std::string& section, const std::string& key, std::optional<T> fallback) const
    {
        auto src = raw(section, key);
        if (!src) {
            if (fallback) return *fallback;
            throw ConfigError("missing [" + section + "] " + key);
        }
        std::istringstream is(*src);
        T value{};
        char extra = 0;
        if (!(is >> value) || (is >> extra)) throw ConfigError("[" + section + "] " + key + ": not a number: '" + *src + "'");
        return value;
    }

    [[nodiscard]] bool flag(const std::string& section, const std::string& key, bool fallback) const
    {
        auto src = raw(section, key);
        if (!src) return fallback;
        if (*src == "true" || *src == "1" || *src == "yes") return true;
        if (*src == "false" || *src == "0" || *src == "no") return false;
        throw ConfigError("[" + section + "] " + key + ": expected true or false, got '" + *src + "'");
    }

private:
    const pt::ptree& tree_;
};

void check_keys(const pt::ptree& tree)
{
    const auto& keys = known_keys();
    for (const auto& [section, child] : tree) {
        auto it = keys.find(section);
        if (it == keys.end()) throw ConfigError("unknown section [" + section + "]");
        for (const auto& [key, value] : child) {
            (void)value;
            const bool ok = section == "constraints" ? key.size() > 1 && key[0] == 'g' &&
                                                           key.find_first_not_of("0123456789", 1) == std::string::npos
                                                     : it->second.count(key) > 0;
            if (!ok) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
        }
    }
}

std::vector<double> parse_list(const std::string& src)
{
    std::vector<double> out;
    std::stringstream ss(src);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::istringstream is(item);
        double v = 0.0;
        char extra = 0;
        if (!(is >> v) || (is >> extra)) throw ConfigError("[sweep] t: not a number: '" + item + "'");
        out.push_back(v);
    }
    return out;
}

}  // namespace

InstanceConfig parse_config(std::istream& is)
{
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    }
    catch (const pt::ini_parser_error& err) {
        throw ConfigError(std::string("malformed instance file: ") + err.what());
    }
    check_keys(tree);
    const Reader rd(tree);

    InstanceConfig cfg;
    cfg.n_boundary = rd.number<int>("domain", "n_boundary", 64);
    cfg.refinement = rd.number<int>("domain", "refinement", 0);
    if (cfg.n_boundary < 8) throw ConfigError("[domain] n_boundary must be at least 8");
    if (cfg.refinement < 0 || cfg.refinement > 6) throw ConfigError("[domain] refinement must lie in 0..6");

    ProblemSpec& s = cfg.spec;
    s.r = rd.number<double>("domain", "r", 3.0);
    s.op.a11 = rd.expr("operator", "a11", "1");
    s.op.a12 = rd.expr("operator", "a12", "0");
    s.op.a22 = rd.expr("operator", "a22", "1");
    s.op.a0 = rd.expr("operator", "a0", "1");
    s.op.c0 = rd.number<double>("operator", "C0", 1.0);

    s.L = rd.expr("cost", "L");
    s.ell = rd.expr("cost", "ell", "0");
    s.alpha = rd.expr("cost", "alpha", "0");
    s.beta = rd.expr("cost", "beta");
    s.gamma = rd.number<double>("cost", "gamma", std::nullopt);
    s.h = rd.expr("state", "h");
    s.sample_bound = rd.number<double>("state", "M", 10.0);
    s.lambda_bar = rd.expr("parameter", "lambda_bar", "0");

    for (int i = 1;; ++i) {
        const std::string key = "g" + std::to_string(i);
        if (!rd.raw("constraints", key)) break;
        s.g.push_back(rd.expr("constraints", key));
    }
    if (auto c = tree.get_child_optional("constraints")) {
        if (c->size() != s.g.size()) throw ConfigError("[constraints] keys must be g1, g2, ... without gaps");
    }

    cfg.solver.kkt_tol = rd.number<double>("solver", "kkt_tol", 1e-8);
    cfg.solver.damping = rd.number<double>("solver", "damping", 0.5);
    cfg.solver.adaptive = rd.flag("solver", "adaptive", true);
    cfg.solver.max_outer = rd.number<int>("solver", "max_outer", 200);
    cfg.ssc_samples = rd.number<int>("solver", "ssc_samples", 100);
    try {
        cfg.solver.validate();
    }
    catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("[solver] ") + err.what());
    }

    if (rd.has_section("sweep")) {
        SweepConfig sw;
        sw.delta = rd.expr("sweep", "delta");
        const auto t = rd.raw("sweep", "t");
        if (!t) throw ConfigError("missing [sweep] t");
        sw.t = parse_list(*t);
        sw.seed = rd.number<std::uint64_t>("sweep", "seed", 1);
        sw.warm_start = rd.flag("sweep", "warm_start", false);
        cfg.sweep = std::move(sw);
    }
    return cfg;
}

InstanceConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open instance file '" + path + "'");
    return parse_config(in);
}

}  // namespace bcstab
