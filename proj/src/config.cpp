#include "slq/config.hpp"

#include "slq/scenarios.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace slq {

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// Cursor over one value with column tracking for diagnostics.
class ValueParser {
public:
    ValueParser(const std::string& src, std::size_t line, std::size_t col0, std::string text)
        : src_(src), line_(line), col0_(col0), s_(std::move(text)) {}

    [[noreturn]] void fail(const std::string& msg) const { fail_at(pos_, msg); }
    [[noreturn]] void fail_at(std::size_t pos, const std::string& msg) const {
        throw ConfigError(src_, line_, col0_ + pos, msg);
    }
    // Start of the next token, for errors found after it was consumed.
    std::size_t mark() {
        skip_ws();
        return pos_;
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool done() {
        skip_ws();
        return pos_ >= s_.size();
    }
    void expect(char c) {
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    double number() {
        skip_ws();
        const char* begin = s_.c_str() + pos_;
        const char* p = begin;
        if (*p == '+') ++p;  // from_chars rejects a leading plus
        double v = 0.0;
        const auto res = std::from_chars(p, s_.c_str() + s_.size(), v);
        if (res.ec != std::errc() || res.ptr == p) fail("expected a number");
        pos_ += static_cast<std::size_t>(res.ptr - begin);
        if (!std::isfinite(v)) fail_at(static_cast<std::size_t>(begin - s_.c_str()), "number is not finite");
        return v;
    }
    std::string word() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        if (start == pos_) fail("expected a name");
        return s_.substr(start, pos_ - start);
    }
    void finish() {
        if (!done()) fail("unexpected trailing characters");
    }

private:
    const std::string& src_;
    std::size_t line_, col0_;
    std::string s_;
    std::size_t pos_ = 0;
};

CoefficientFn parse_coefficient(ValueParser& p) {
    if (!p.accept('[')) {
        const double v = p.number();
        p.finish();
        return CoefficientFn(v);
    }
    std::vector<std::pair<double, double>> pts;
    do {
        const std::size_t at = p.mark();
        p.expect('(');
        const double t = p.number();
        p.expect(',');
        const double v = p.number();
        p.expect(')');
        if (!pts.empty() && !(t > pts.back().first)) p.fail_at(at, "table times must be strictly increasing");
        pts.emplace_back(t, v);
    } while (p.accept(','));
    p.expect(']');
    p.finish();
    return CoefficientFn::table(std::move(pts));
}

std::vector<double> parse_list(ValueParser& p) {
    std::vector<double> out;
    if (p.done()) return out;
    do out.push_back(p.number());
    while (p.accept(','));
    p.finish();
    return out;
}

double parse_number(ValueParser& p) {
    const double v = p.number();
    p.finish();
    return v;
}

std::uint64_t parse_unsigned(ValueParser& p, const std::string& raw) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (res.ec != std::errc() || res.ptr != raw.data() + raw.size()) p.fail("expected a non-negative integer");
    return v;
}

bool parse_bool(ValueParser& p) {
    const std::size_t at = p.mark();
    const std::string w = p.word();
    p.finish();
    if (w == "true") return true;
    if (w == "false") return false;
    p.fail_at(at, "expected true or false");
}

std::vector<PerturbationEntry> parse_perturbations(ValueParser& p) {
    std::vector<PerturbationEntry> out;
    if (p.done()) return out;
    do {
        const std::size_t at = p.mark();
        const std::string kind = p.word();
        PerturbationEntry e;
        if (kind == "shift")
            e.kind = PerturbationSpec::Kind::Shift;
        else if (kind == "ramp")
            e.kind = PerturbationSpec::Kind::Ramp;
        else if (kind == "gain")
            e.kind = PerturbationSpec::Kind::GainScale;
        else
            p.fail_at(at, "perturbation kind must be shift, ramp or gain");
        p.expect(':');
        e.eps = p.number();
        out.push_back(e);
    } while (p.accept(','));
    p.finish();
    return out;
}

std::string trim(const std::string& s, std::size_t& lead) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    lead = a;
    return s.substr(a, b - a);
}

const std::set<std::string> kSections = {"advertising", "model", "cost_follower", "cost_leader", "grid",
                                         "montecarlo",  "verify", "sweep", "output"};

CoefficientFn* model_field(ModelSpec& m, const std::string& key) {
    static const std::map<std::string, CoefficientFn ModelSpec::*> fields = {
        {"A", &ModelSpec::A}, {"B1", &ModelSpec::B1}, {"B2", &ModelSpec::B2}, {"alpha", &ModelSpec::alpha},
        {"c", &ModelSpec::c}, {"cbar", &ModelSpec::cbar}, {"f1", &ModelSpec::f1}, {"f2", &ModelSpec::f2},
        {"g", &ModelSpec::g}};
    auto it = fields.find(key);
    return it == fields.end() ? nullptr : &(m.*(it->second));
}

struct CostFields {
    CoefficientFn ModelSpec::*L, ModelSpec::*R, ModelSpec::*l, ModelSpec::*r;
    double ModelSpec::*M, ModelSpec::*m;
};
const CostFields kFollowerCost{&ModelSpec::L, &ModelSpec::R, &ModelSpec::l, &ModelSpec::r, &ModelSpec::M, &ModelSpec::m};
const CostFields kLeaderCost{&ModelSpec::Lbar, &ModelSpec::Rbar, &ModelSpec::lbar, &ModelSpec::rbar, &ModelSpec::Mbar,
                             &ModelSpec::mbar};

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
    RunConfig cfg;
    AdvertisingParams adv;
    bool has_adv = false, has_model = false;
    std::string section;
    std::set<std::string> seen;  // section.key
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::size_t lead = 0;
        const std::string line = trim(raw, lead);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(source, line_no, lead + line.size(), "expected ']'");
            section = line.substr(1, line.size() - 2);
            if (!kSections.count(section)) throw ConfigError(source, line_no, lead + 2, "unknown section [" + section + "]");
            if (section == "advertising") has_adv = true;
            if (section == "model" || section == "cost_follower" || section == "cost_leader") has_model = true;
            if (has_adv && has_model)
                throw ConfigError(source, line_no, lead + 1, "[advertising] cannot be combined with explicit model sections");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(source, line_no, lead + 1, "expected 'key = value'");
        std::size_t klead = 0, vlead = 0;
        const std::string key = trim(line.substr(0, eq), klead);
        const std::string value = trim(line.substr(eq + 1), vlead);
        const std::size_t key_col = lead + klead + 1;
        const std::size_t val_col = lead + eq + 1 + vlead + 1;
        if (section.empty()) throw ConfigError(source, line_no, key_col, "key outside of any section");
        if (key.empty()) throw ConfigError(source, line_no, key_col, "empty key");
        if (!seen.insert(section + "." + key).second)
            throw ConfigError(source, line_no, key_col, "duplicate key '" + key + "' in [" + section + "]");
        ValueParser p(source, line_no, val_col, value);
        auto unknown = [&]() -> void {
            throw ConfigError(source, line_no, key_col, "unknown key '" + key + "' in [" + section + "]");
        };

        if (section == "advertising") {
            const auto& names = advertising_param_names();
            if (std::find(names.begin(), names.end(), key) == names.end()) unknown();
            set_advertising_param(adv, key, parse_number(p));
        } else if (section == "model") {
            if (key == "x0") {
                cfg.model.x0 = parse_number(p);
            } else if (CoefficientFn* f = model_field(cfg.model, key)) {
                *f = parse_coefficient(p);
            } else {
                unknown();
            }
        } else if (section == "cost_follower" || section == "cost_leader") {
            const CostFields& cf = section == "cost_follower" ? kFollowerCost : kLeaderCost;
            if (key == "L") cfg.model.*cf.L = parse_coefficient(p);
            else if (key == "R") cfg.model.*cf.R = parse_coefficient(p);
            else if (key == "l") cfg.model.*cf.l = parse_coefficient(p);
            else if (key == "r") cfg.model.*cf.r = parse_coefficient(p);
            else if (key == "M") cfg.model.*cf.M = parse_number(p);
            else if (key == "m") cfg.model.*cf.m = parse_number(p);
            else unknown();
        } else if (section == "grid") {
            if (key == "T") {
                cfg.T = parse_number(p);
                if (!(cfg.T > 0.0)) p.fail("T must be positive");
            } else if (key == "N") {
                cfg.N = parse_unsigned(p, value);
                if (cfg.N < 2) p.fail("N must be at least 2");
            } else {
                unknown();
            }
        } else if (section == "montecarlo") {
            if (key == "seed") cfg.noise.seed = parse_unsigned(p, value);
            else if (key == "paths") {
                cfg.noise.paths = parse_unsigned(p, value);
                if (cfg.noise.paths < 1) p.fail("paths must be at least 1");
            } else if (key == "antithetic") cfg.noise.antithetic = parse_bool(p);
            else if (key == "checkpoints") cfg.checkpoints = parse_list(p);
            else if (key == "store_paths") cfg.store_paths = parse_unsigned(p, value);
            else unknown();
        } else if (section == "verify") {
            if (key == "perturbation_paths") cfg.perturbation_paths = parse_unsigned(p, value);
            else if (key == "leader_perturbations") cfg.leader_perturbations = parse_perturbations(p);
            else if (key == "follower_perturbations") cfg.follower_perturbations = parse_perturbations(p);
            else unknown();
        } else if (section == "sweep") {
            const auto& names = advertising_param_names();
            if (std::find(names.begin(), names.end(), key) == names.end()) unknown();
            std::vector<double> vals = parse_list(p);
            if (vals.empty()) p.fail("sweep needs at least one value");
            cfg.sweeps.emplace_back(key, std::move(vals));
        } else if (section == "output") {
            if (key == "dir") {
                if (value.empty()) p.fail("empty output directory");
                cfg.out_dir = value;
            } else {
                unknown();
            }
        }
    }
    if (has_adv) cfg.advertising = adv;
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(path, 0, 0, "cannot open config file");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

namespace {

std::string format_coefficient(const CoefficientFn& f) {
    if (f.is_constant()) return shortest(f.constant_value());
    std::string out = "[";
    for (std::size_t i = 0; i < f.points().size(); ++i) {
        if (i) out += ", ";
        out += "(" + shortest(f.points()[i].first) + ", " + shortest(f.points()[i].second) + ")";
    }
    return out + "]";
}

std::string format_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + shortest(v[i]);
    return out;
}

std::string format_perturbations(const std::vector<PerturbationEntry>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const char* kind = v[i].kind == PerturbationSpec::Kind::Shift  ? "shift"
                           : v[i].kind == PerturbationSpec::Kind::Ramp ? "ramp"
                                                                       : "gain";
        out += (i ? ", " : "") + std::string(kind) + ":" + shortest(v[i].eps);
    }
    return out;
}

}  // namespace

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream o;
    if (cfg.advertising) {
        o << "[advertising]\n";
        for (const auto& name : advertising_param_names())
            o << name << " = " << shortest(get_advertising_param(*cfg.advertising, name)) << "\n";
    } else {
        ModelSpec m = cfg.model;
        o << "[model]\n";
        for (const char* k : {"A", "B1", "B2", "alpha", "c", "cbar", "f1", "f2", "g"})
            o << k << " = " << format_coefficient(*model_field(m, k)) << "\n";
        o << "x0 = " << shortest(m.x0) << "\n";
        for (const auto* cf : {&kFollowerCost, &kLeaderCost}) {
            o << "\n[" << (cf == &kFollowerCost ? "cost_follower" : "cost_leader") << "]\n";
            o << "L = " << format_coefficient(m.*cf->L) << "\n";
            o << "R = " << format_coefficient(m.*cf->R) << "\n";
            o << "l = " << format_coefficient(m.*cf->l) << "\n";
            o << "r = " << format_coefficient(m.*cf->r) << "\n";
            o << "M = " << shortest(m.*cf->M) << "\n";
            o << "m = " << shortest(m.*cf->m) << "\n";
        }
    }
    o << "\n[grid]\nT = " << shortest(cfg.T) << "\nN = " << cfg.N << "\n";
    o << "\n[montecarlo]\nseed = " << cfg.noise.seed << "\npaths = " << cfg.noise.paths
      << "\nantithetic = " << (cfg.noise.antithetic ? "true" : "false") << "\n";
    if (!cfg.checkpoints.empty()) o << "checkpoints = " << format_list(cfg.checkpoints) << "\n";
    o << "store_paths = " << cfg.store_paths << "\n";
    o << "\n[verify]\nperturbation_paths = " << cfg.perturbation_paths
      << "\nleader_perturbations = " << format_perturbations(cfg.leader_perturbations)
      << "\nfollower_perturbations = " << format_perturbations(cfg.follower_perturbations) << "\n";
    if (!cfg.sweeps.empty()) {
        o << "\n[sweep]\n";
        for (const auto& [name, vals] : cfg.sweeps) o << name << " = " << format_list(vals) << "\n";
    }
    o << "\n[output]\ndir = " << cfg.out_dir << "\n";
    return o.str();
}

ModelSpec RunConfig::resolved_model() const { return advertising ? from_advertising(*advertising) : model; }

std::vector<std::size_t> RunConfig::checkpoint_nodes() const {
    const TimeGrid g = grid();
    return slq::checkpoint_nodes(g, checkpoints.empty() ? default_checkpoint_times(g) : checkpoints);
}

bool RunConfig::operator==(const RunConfig& o) const {
    return advertising == o.advertising && model == o.model && T == o.T && N == o.N && noise.seed == o.noise.seed &&
           noise.paths == o.noise.paths && noise.antithetic == o.noise.antithetic && checkpoints == o.checkpoints &&
           store_paths == o.store_paths && perturbation_paths == o.perturbation_paths &&
           leader_perturbations == o.leader_perturbations && follower_perturbations == o.follower_perturbations &&
           sweeps == o.sweeps && out_dir == o.out_dir;
}

}  // namespace slq
