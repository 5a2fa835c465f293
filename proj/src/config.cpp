#include "noiselab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "noiselab/error.hpp"

namespace noiselab {

namespace {

std::string join(const std::string& where, const std::string& key)
{
    return where.empty() ? key : where + "." + key;
}

// Reads one JSON object field by field and rejects leftovers, so every error names its field.
class Fields {
public:
    Fields(const Json& obj, std::string where) : obj_(obj), where_(std::move(where))
    {
        if (!obj_.is_object())
            throw ConfigError(label() + " must be a table/object");
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    double number(const std::string& key, std::optional<double> def, std::function<bool(double)> ok = {},
                  const char* requirement = "")
    {
        const Json* v = take(key);
        if (!v) {
            if (!def)
                throw ConfigError(join(where_, key) + " is required");
            return *def;
        }
        if (!v->is_number())
            throw ConfigError(join(where_, key) + " must be a number");
        double x = v->get<double>();
        if (ok && !ok(x))
            throw ConfigError(join(where_, key) + " must be " + requirement + " (got " + v->dump() + ")");
        return x;
    }

    std::size_t count(const std::string& key, std::optional<std::size_t> def, std::size_t min = 0)
    {
        const Json* v = take(key);
        if (!v) {
            if (!def)
                throw ConfigError(join(where_, key) + " is required");
            return *def;
        }
        if (!v->is_number_integer() || v->get<long long>() < 0)
            throw ConfigError(join(where_, key) + " must be a nonnegative integer");
        auto x = v->get<std::size_t>();
        if (x < min)
            throw ConfigError(join(where_, key) + " must be at least " + std::to_string(min));
        return x;
    }

    bool boolean(const std::string& key, bool def)
    {
        const Json* v = take(key);
        if (!v)
            return def;
        if (!v->is_boolean())
            throw ConfigError(join(where_, key) + " must be true or false");
        return v->get<bool>();
    }

    std::optional<std::string> string(const std::string& key)
    {
        const Json* v = take(key);
        if (!v)
            return std::nullopt;
        if (!v->is_string())
            throw ConfigError(join(where_, key) + " must be a string");
        return v->get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, bool required = false)
    {
        const Json* v = take(key);
        if (!v) {
            if (required)
                throw ConfigError(join(where_, key) + " is required");
            return {};
        }
        if (!v->is_array())
            throw ConfigError(join(where_, key) + " must be an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            if (!(*v)[i].is_number())
                throw ConfigError(join(where_, key) + "[" + std::to_string(i) + "] must be a number");
            out.push_back((*v)[i].get<double>());
        }
        return out;
    }

    const Json* object(const std::string& key)
    {
        const Json* v = take(key);
        if (v && !v->is_object())
            throw ConfigError(join(where_, key) + " must be a table/object");
        return v;
    }

    const Json* raw(const std::string& key) { return take(key); }

    void finish() const
    {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError("unknown field " + join(where_, it.key()));
    }

    const std::string& where() const { return where_; }

private:
    std::string label() const { return where_.empty() ? "config" : where_; }

    const Json* take(const std::string& key)
    {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    const Json& obj_;
    std::string where_;
    std::set<std::string> seen_;
};

const auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
const auto nonneg = [](double x) { return x >= 0.0 && std::isfinite(x); };
const auto finite = [](double x) { return std::isfinite(x); };
const auto open_unit = [](double x) { return x > 0.0 && x < 1.0; };

Json node_to_json(const toml::node& node)
{
    if (auto* t = node.as_table()) {
        Json out = Json::object();
        for (auto&& [k, v] : *t)
            out[std::string(k.str())] = node_to_json(v);
        return out;
    }
    if (auto* a = node.as_array()) {
        Json out = Json::array();
        for (auto&& v : *a)
            out.push_back(node_to_json(v));
        return out;
    }
    if (auto* v = node.as_integer())
        return v->get();
    if (auto* v = node.as_floating_point())
        return v->get();
    if (auto* v = node.as_boolean())
        return v->get();
    if (auto* v = node.as_string())
        return v->get();
    std::ostringstream os;
    node.visit([&](auto&& n) { os << n; });
    return os.str();
}

TrainConfig parse_train(const Json& j, const std::string& where, double data_sigma)
{
    Fields f(j, where);
    TrainConfig c;
    if (auto* l = f.raw("loss"))
        c.loss = parse_loss(*l, join(where, "loss"));
    if (auto* e = f.object("elr")) {
        Fields ef(*e, join(where, "elr"));
        ElrConfig elr;
        elr.beta = ef.number("beta", 0.9, [](double x) { return x >= 0.0 && x < 1.0; }, "in [0, 1)");
        elr.lambda = ef.number("lambda", 3.0, nonneg, "nonnegative");
        ef.finish();
        c.elr = elr;
    }
    if (auto* r = f.raw("regularizer"))
        c.regularizer = parse_loss(*r, join(where, "regularizer"));
    if (f.has("corrector_threshold"))
        c.corrector_threshold = f.number("corrector_threshold", std::nullopt, open_unit, "in (0, 1)");
    c.lr = f.number("lr", c.lr, positive, "positive");
    c.epochs = f.count("epochs", c.epochs, 1);
    c.batch_size = f.count("batch_size", c.batch_size, 1);
    c.weight_decay = f.number("weight_decay", 0.0, nonneg, "nonnegative");
    if (auto* e = f.object("eval")) {
        Fields ef(*e, join(where, "eval"));
        c.schedule.per_batch_until = ef.count("per_batch_until", c.schedule.per_batch_until);
        c.schedule.then_every = ef.number("then_every", c.schedule.then_every, positive, "positive");
        ef.finish();
    }
    f.finish();
    c.data_sigma = data_sigma;
    return c;
}

GeometryConfig parse_geometry(const Json* j, const std::string& where)
{
    GeometryConfig g;
    if (!j)
        return g;
    Fields f(*j, where);
    g.num_classes = static_cast<int>(f.count("classes", static_cast<std::size_t>(g.num_classes), 2));
    g.dim = f.count("dim", g.dim, 1);
    g.sep = f.number("sep", g.sep, positive, "positive");
    g.sigma = f.number("sigma", g.sigma, positive, "positive");
    g.delta_scale = f.number("delta_scale", g.delta_scale, nonneg, "nonnegative");
    g.shift_from = static_cast<int>(f.count("shift_from", static_cast<std::size_t>(g.shift_from)));
    g.shift_to = static_cast<int>(f.count("shift_to", static_cast<std::size_t>(g.shift_to)));
    g.n_source = f.count("n_source", g.n_source, 1);
    g.n_target = f.count("n_target", g.n_target, 1);
    f.finish();
    if (g.dim < static_cast<std::size_t>(g.num_classes))
        throw ConfigError(join(where, "dim") + " must be at least the class count");
    if (g.shift_from >= g.num_classes || g.shift_to >= g.num_classes || g.shift_from == g.shift_to)
        throw ConfigError(join(where, "shift_from") + "/shift_to must name two distinct classes");
    return g;
}

SourceConfig parse_source(const Json* j, const std::string& where)
{
    SourceConfig s;
    if (!j)
        return s;
    Fields f(*j, where);
    s.lr = f.number("lr", s.lr, positive, "positive");
    s.epochs = f.count("epochs", s.epochs, 1);
    s.batch_size = f.count("batch_size", s.batch_size, 1);
    s.weight_decay = f.number("weight_decay", s.weight_decay, nonneg, "nonnegative");
    f.finish();
    return s;
}

EtpRunParams parse_etp(Fields& f, bool grid)
{
    EtpRunParams p;
    p.n = f.count("n", p.n, 1);
    p.dim = f.count("dim", p.dim, 1);
    if (!grid) {
        p.sigma = f.number("sigma", p.sigma, positive, "positive");
        p.r = f.number("r", p.r, [](double x) { return x < 1.0; }, "below 1");
    }
    p.eta = f.number("eta", p.eta, positive, "positive");
    p.max_steps = f.count("max_steps", static_cast<std::size_t>(std::llround(50.0 / p.eta)), 1);
    p.half_argument = f.boolean("half_argument", false);
    p.mu = f.numbers("mu");
    if (!p.mu.empty()) {
        if (p.mu.size() != p.dim)
            throw ConfigError(join(f.where(), "mu") + " must have dim entries");
        double s = 0.0;
        for (double v : p.mu)
            s += v * v;
        if (std::abs(std::sqrt(s) - 1.0) > 1e-9)
            throw ConfigError(join(f.where(), "mu") + " must be a unit vector");
    }
    return p;
}

} // namespace

std::string kind_name(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::RateSweep: return "rate_sweep";
    case ExperimentKind::RegionCheck: return "region_check";
    case ExperimentKind::EtpRun: return "etp_run";
    case ExperimentKind::EtpGrid: return "etp_grid";
    case ExperimentKind::BenchRun: return "bench_run";
    case ExperimentKind::BenchCompare: return "bench_compare";
    case ExperimentKind::Memorization: return "memorization";
    }
    return "unknown";
}

bool is_grid_kind(ExperimentKind k) { return k == ExperimentKind::EtpGrid || k == ExperimentKind::BenchCompare; }

LossSpec parse_loss(const Json& j, const std::string& where)
{
    if (j.is_string()) {
        Json obj = {{"kind", j.get<std::string>()}};
        return parse_loss(obj, where);
    }
    Fields f(j, where);
    auto kind = f.string("kind");
    if (!kind)
        throw ConfigError(join(where, "kind") + " is required");
    LossSpec s;
    s.lambda = f.number("lambda", 1.0, nonneg, "nonnegative");
    const auto neg = [](double x) { return x < 0.0; };
    if (*kind == "ce") {
        s.kind = CrossEntropy{};
    } else if (*kind == "mae") {
        s.kind = MeanAbsolute{};
    } else if (*kind == "rce") {
        s.kind = ReverseCrossEntropy{f.number("log_zero", -4.0, neg, "negative")};
    } else if (*kind == "gce") {
        s.kind = GeneralizedCrossEntropy{f.number("q", 0.7, [](double x) { return x > 0.0 && x <= 1.0; }, "in (0, 1]")};
    } else if (*kind == "sl") {
        SymmetricCrossEntropy sl;
        sl.alpha = f.number("alpha", sl.alpha, nonneg, "nonnegative");
        sl.beta = f.number("beta", sl.beta, nonneg, "nonnegative");
        sl.log_zero = f.number("log_zero", sl.log_zero, neg, "negative");
        s.kind = sl;
    } else if (*kind == "gjs") {
        JensenShannon g;
        auto w = f.numbers("weights");
        if (!w.empty())
            g.weights = w;
        g.perturb_sigma = f.number("perturb_sigma", g.perturb_sigma, nonneg, "nonnegative");
        s.kind = g;
    } else if (*kind == "normalized") {
        const Json* inner = f.raw("inner");
        if (!inner)
            throw ConfigError(join(where, "inner") + " is required");
        s.kind = Normalized{std::make_shared<const LossSpec>(parse_loss(*inner, join(where, "inner")))};
    } else if (*kind == "sr") {
        s.kind = SelfRegularization{};
    } else {
        throw ConfigError(join(where, "kind") + " has unknown value \"" + *kind + "\"");
    }
    f.finish();
    try {
        s.validate();
    } catch (const SpecError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return s;
}

Json loss_to_json(const LossSpec& spec)
{
    Json j;
    j["kind"] = spec.name();
    if (auto* r = std::get_if<ReverseCrossEntropy>(&spec.kind))
        j["log_zero"] = r->log_zero;
    if (auto* g = std::get_if<GeneralizedCrossEntropy>(&spec.kind))
        j["q"] = g->q;
    if (auto* s = std::get_if<SymmetricCrossEntropy>(&spec.kind)) {
        j["alpha"] = s->alpha;
        j["beta"] = s->beta;
        j["log_zero"] = s->log_zero;
    }
    if (auto* g = std::get_if<JensenShannon>(&spec.kind)) {
        j["weights"] = g->weights;
        j["perturb_sigma"] = g->perturb_sigma;
    }
    if (auto* n = std::get_if<Normalized>(&spec.kind)) {
        j["kind"] = "normalized";
        j["inner"] = loss_to_json(*n->inner);
    }
    j["lambda"] = spec.lambda;
    return j;
}

std::string config_hash(const Json& doc)
{
    std::string text = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json toml_to_json(const std::string& text)
{
    try {
        auto tbl = toml::parse(text);
        return node_to_json(tbl);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
        throw ConfigError(os.str());
    }
}

ExperimentConfig parse_config(const Json& doc)
{
    Fields top(doc, "");
    ExperimentConfig cfg;
    auto name = top.string("name");
    if (!name || name->empty())
        throw ConfigError("name is required and must be nonempty");
    for (char c : *name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
            throw ConfigError("name may only contain letters, digits, '_', '-' and '.'");
    cfg.name = *name;

    auto kind = top.string("kind");
    if (!kind)
        throw ConfigError("kind is required");
    static const std::vector<ExperimentKind> kinds{ExperimentKind::RateSweep,  ExperimentKind::RegionCheck,
                                                   ExperimentKind::EtpRun,     ExperimentKind::EtpGrid,
                                                   ExperimentKind::BenchRun,   ExperimentKind::BenchCompare,
                                                   ExperimentKind::Memorization};
    bool found = false;
    for (auto k : kinds)
        if (kind_name(k) == *kind) {
            cfg.kind = k;
            found = true;
        }
    if (!found)
        throw ConfigError("kind has unknown value \"" + *kind + "\"");

    const Json* seeds = top.raw("seeds");
    if (!seeds || !seeds->is_array() || seeds->empty())
        throw ConfigError("seeds must be a nonempty array of nonnegative integers");
    std::set<std::uint64_t> unique;
    for (std::size_t i = 0; i < seeds->size(); ++i) {
        const Json& s = (*seeds)[i];
        if (!s.is_number_integer() || s.get<long long>() < 0)
            throw ConfigError("seeds[" + std::to_string(i) + "] must be a nonnegative integer");
        cfg.seeds.push_back(s.get<std::uint64_t>());
        if (!unique.insert(cfg.seeds.back()).second)
            throw ConfigError("seeds[" + std::to_string(i) + "] repeats an earlier seed");
    }
    cfg.output_dir = top.string("output_dir").value_or("results");

    Json empty = Json::object();
    const Json* params = top.object("parameters");
    Fields f(params ? *params : empty, "parameters");

    switch (cfg.kind) {
    case ExperimentKind::RateSweep: {
        RateSweepParams p;
        p.dim = f.count("dim", p.dim, 1);
        p.sigma = f.number("sigma", p.sigma, positive, "positive");
        p.mu1 = f.numbers("mu1");
        p.mu2 = f.numbers("mu2");
        p.orthogonal = f.numbers("orthogonal_shift");
        p.alpha_min = f.number("alpha_min", p.alpha_min, finite, "finite");
        p.alpha_max = f.number("alpha_max", p.alpha_max, finite, "finite");
        p.alpha_step = f.number("alpha_step", p.alpha_step, positive, "positive");
        p.monte_carlo_samples = f.count("monte_carlo_samples", 0);
        for (auto* v : {&p.mu1, &p.mu2, &p.orthogonal})
            if (!v->empty() && v->size() != p.dim)
                throw ConfigError("parameters: mu1, mu2 and orthogonal_shift need dim entries");
        if (p.alpha_max < p.alpha_min)
            throw ConfigError("parameters.alpha_max must not be below alpha_min");
        cfg.params = p;
        break;
    }
    case ExperimentKind::RegionCheck: {
        RegionCheckParams p;
        p.dim = f.count("dim", p.dim, 1);
        p.sigma = f.number("sigma", p.sigma, positive, "positive");
        p.alpha = f.number("alpha", p.alpha, finite, "finite");
        p.delta_conf = f.number("delta_conf", p.delta_conf, open_unit, "in (0, 1)");
        p.samples = f.count("samples", p.samples, 1);
        p.chain_samples = f.count("chain_samples", p.chain_samples);
        cfg.params = p;
        break;
    }
    case ExperimentKind::EtpRun:
        cfg.params = parse_etp(f, false);
        break;
    case ExperimentKind::EtpGrid: {
        EtpGridParams p;
        p.base = parse_etp(f, true);
        p.sigmas = f.numbers("sigmas", true);
        p.rs = f.numbers("rs", true);
        if (p.sigmas.empty() || p.rs.empty())
            throw ConfigError("parameters.sigmas and parameters.rs must be nonempty");
        for (double s : p.sigmas)
            if (!positive(s))
                throw ConfigError("parameters.sigmas entries must be positive");
        for (double r : p.rs)
            if (!(r < 1.0))
                throw ConfigError("parameters.rs entries must be below 1");
        cfg.params = p;
        break;
    }
    case ExperimentKind::BenchRun:
    case ExperimentKind::BenchCompare:
    case ExperimentKind::Memorization: {
        BenchParams p;
        p.geometry = parse_geometry(f.object("geometry"), "parameters.geometry");
        p.source = parse_source(f.object("source"), "parameters.source");
        const Json* train = f.object("train");
        Json base = train ? *train : Json::object();
        p.train = parse_train(base, "parameters.train", p.geometry.sigma);
        if (cfg.kind == ExperimentKind::BenchCompare) {
            const Json* vars = f.raw("variants");
            if (!vars || !vars->is_array() || vars->empty())
                throw ConfigError("parameters.variants must be a nonempty array");
            std::set<std::string> labels;
            for (std::size_t i = 0; i < vars->size(); ++i) {
                std::string where = "parameters.variants[" + std::to_string(i) + "]";
                const Json& v = (*vars)[i];
                if (!v.is_object() || !v.contains("label") || !v["label"].is_string() ||
                    v["label"].get<std::string>().empty())
                    throw ConfigError(where + ".label is required");
                std::string label = v["label"].get<std::string>();
                for (char c : label)
                    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
                        throw ConfigError(where + ".label may only contain letters, digits, '_' and '-'");
                if (!labels.insert(label).second)
                    throw ConfigError(where + ".label repeats \"" + label + "\"");
                Json merged = base;
                for (auto it = v.begin(); it != v.end(); ++it)
                    if (it.key() != "label")
                        merged[it.key()] = it.value();
                p.variants.push_back({label, parse_train(merged, where, p.geometry.sigma)});
            }
        }
        cfg.params = p;
        break;
    }
    }
    f.finish();
    top.finish();
    cfg.raw = doc;
    cfg.hash = config_hash(doc);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    Json doc;
    if (path.extension() == ".toml") {
        doc = toml_to_json(ss.str());
    } else {
        try {
            doc = Json::parse(ss.str());
        } catch (const Json::parse_error& e) {
            throw ConfigError(std::string("JSON parse error: ") + e.what());
        }
    }
    return parse_config(doc);
}

} // namespace noiselab
