#include "green/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace green {

using nlohmann::json;

namespace {

double scale_to_unit(double v, double lo, double hi)
{
    if (hi - lo <= 0.0)
        return 0.0;
    return (v - lo) / (hi - lo);
}

double scale_from_unit(double v, double lo, double hi)
{
    if (hi - lo <= 0.0)
        return lo;
    return lo + v * (hi - lo);
}

const json& require(const json& obj, const char* field, std::size_t line)
{
    if (!obj.is_object())
        throw ParseError(line, field, "expected a JSON object");
    auto it = obj.find(field);
    if (it == obj.end())
        throw ParseError(line, field, "missing field");
    return *it;
}

double require_number(const json& obj, const char* field, std::size_t line)
{
    const auto& v = require(obj, field, line);
    if (!v.is_number())
        throw ParseError(line, field, "expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d))
        throw ParseError(line, field, "expected a finite number");
    return d;
}

std::string require_string(const json& obj, const char* field, std::size_t line)
{
    const auto& v = require(obj, field, line);
    if (!v.is_string())
        throw ParseError(line, field, "expected a string");
    return v.get<std::string>();
}

long long require_integer(const json& obj, const char* field, std::size_t line)
{
    const auto& v = require(obj, field, line);
    if (!v.is_number_integer())
        throw ParseError(line, field, "expected an integer");
    return v.get<long long>();
}

FeatureVector parse_features(const json& rec, std::size_t line)
{
    const auto& f = require(rec, "features", line);
    if (!f.is_object())
        throw ParseError(line, "features", "expected an object");
    const json* mask = nullptr;
    if (auto it = rec.find("mask"); it != rec.end()) {
        if (!it->is_object())
            throw ParseError(line, "mask", "expected an object");
        mask = &*it;
    }

    FeatureVector fv;
    for (std::size_t g = 0; g < kFeatureGroups; ++g) {
        const std::string name(kFeatureGroupNames[g]);
        const std::string field = "features." + name;
        auto it = f.find(name);
        if (it == f.end())
            throw ParseError(line, field, "missing field");
        if (!it->is_array())
            throw ParseError(line, field, "expected an array of numbers");
        for (const auto& v : *it) {
            if (!v.is_number() || !std::isfinite(v.get<double>()))
                throw ParseError(line, field, "expected an array of finite numbers");
            fv.values[g].push_back(v.get<double>());
        }
        if (mask != nullptr && mask->contains(name)) {
            const auto& m = (*mask)[name];
            const std::string mfield = "mask." + name;
            if (!m.is_array() || m.size() != fv.values[g].size())
                throw ParseError(line, mfield, "mask width differs from feature width");
            for (const auto& bit : m) {
                if (!bit.is_number_integer() || (bit.get<int>() != 0 && bit.get<int>() != 1))
                    throw ParseError(line, mfield, "mask entries must be 0 or 1");
                fv.mask[g].push_back(static_cast<std::uint8_t>(bit.get<int>()));
            }
        }
        else {
            fv.mask[g].assign(fv.values[g].size(), 1);
        }
    }
    return fv;
}

ConfigRecord record_from_json(const json& rec, std::size_t line)
{
    if (!rec.is_object())
        throw ParseError(line, "<record>", "expected a JSON object");
    ConfigRecord r;
    r.config_id = require_string(rec, "config_id", line);
    r.dataset_id = require_string(rec, "dataset_id", line);
    try {
        r.domain_tag = parse_domain_tag(require_string(rec, "domain_tag", line));
    }
    catch (const ParseError&) {
        throw;
    }
    catch (const InputError& e) {
        throw ParseError(line, "domain_tag", e.what());
    }
    r.discard_pct = require_number(rec, "discard_pct", line);
    if (r.discard_pct < 0.0 || r.discard_pct > 1.0)
        throw ParseError(line, "discard_pct", "must lie in [0,1]");
    r.features = parse_features(rec, line);

    const auto& hp = require(rec, "hyperparams", line);
    if (!hp.is_object())
        throw ParseError(line, "hyperparams", "expected an object");
    auto bs = require_integer(hp, "batch_size", line);
    if (bs < 1 || bs > std::numeric_limits<int>::max())
        throw ParseError(line, "hyperparams.batch_size", "must be a positive integer");
    r.hyperparams.batch_size = static_cast<int>(bs);
    r.hyperparams.learning_rate = require_number(hp, "learning_rate", line);
    if (!(r.hyperparams.learning_rate > 0.0))
        throw ParseError(line, "hyperparams.learning_rate", "must be positive");

    const auto& curve = require(rec, "curve", line);
    if (!curve.is_array() || curve.empty())
        throw ParseError(line, "curve", "expected a non-empty array");
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const auto& p = curve[i];
        EpochPoint ep;
        ep.epoch = static_cast<int>(require_integer(p, "epoch", line));
        ep.accuracy = require_number(p, "accuracy", line);
        ep.energy = require_number(p, "energy", line);
        if (ep.epoch != static_cast<int>(i) + 1)
            throw ParseError(line, "curve", "epochs must run 1..V consecutively");
        if (ep.energy < 0.0)
            throw ParseError(line, "curve", "energy must be non-negative");
        if (i > 0 && ep.energy < r.curve.back().energy)
            throw ParseError(line, "curve", "energy must be cumulative (non-decreasing)");
        r.curve.push_back(ep);
    }
    return r;
}

json scaling_to_json(const ScalingParams& s)
{
    json out = json::object();
    for (const auto& [id, d] : s.per_dataset)
        out[id] = {{"energy_min", d.energy_min}, {"energy_max", d.energy_max}, {"acc_min", d.acc_min},
                   {"acc_max", d.acc_max}, {"acc_scaled", d.acc_scaled}};
    return out;
}

ScalingParams scaling_from_json(const json& j, std::size_t line)
{
    if (!j.is_object())
        throw ParseError(line, "corpus_header.scaling", "expected an object");
    ScalingParams s;
    for (const auto& [id, d] : j.items()) {
        DatasetScaling ds;
        ds.energy_min = require_number(d, "energy_min", line);
        ds.energy_max = require_number(d, "energy_max", line);
        ds.acc_min = require_number(d, "acc_min", line);
        ds.acc_max = require_number(d, "acc_max", line);
        const auto& scaled = require(d, "acc_scaled", line);
        if (!scaled.is_boolean())
            throw ParseError(line, "corpus_header.scaling.acc_scaled", "expected a boolean");
        ds.acc_scaled = scaled.get<bool>();
        if (ds.energy_max < ds.energy_min || ds.acc_max < ds.acc_min)
            throw ParseError(line, "corpus_header.scaling", "max below min");
        s.per_dataset.emplace(id, ds);
    }
    return s;
}

json widths_to_json(const FeatureWidths& w)
{
    json out = json::object();
    for (std::size_t g = 0; g < kFeatureGroups; ++g)
        out[std::string(kFeatureGroupNames[g])] = w[g];
    return out;
}

} // namespace

ParseError::ParseError(std::size_t line, std::string field, const std::string& message)
    : InputError("line " + std::to_string(line) + ": field '" + field + "': " + message), line_(line),
      field_(std::move(field))
{
}

double DatasetScaling::normalize_energy(double e) const { return scale_to_unit(e, energy_min, energy_max); }
double DatasetScaling::denormalize_energy(double e) const { return scale_from_unit(e, energy_min, energy_max); }
double DatasetScaling::normalize_acc(double a) const { return acc_scaled ? scale_to_unit(a, acc_min, acc_max) : a; }
double DatasetScaling::denormalize_acc(double a) const { return acc_scaled ? scale_from_unit(a, acc_min, acc_max) : a; }

const DatasetScaling& ScalingParams::at(const std::string& dataset_id) const
{
    auto it = per_dataset.find(dataset_id);
    if (it == per_dataset.end())
        throw InputError("no scaling parameters for dataset '" + dataset_id + "'");
    return it->second;
}

std::set<std::string> Corpus::dataset_ids() const
{
    std::set<std::string> ids;
    for (const auto& r : records)
        ids.insert(r.dataset_id);
    return ids;
}

int Corpus::max_epoch() const
{
    int v = 0;
    for (const auto& r : records)
        v = std::max(v, r.max_epoch());
    return v;
}

ConfigRecord parse_record(const std::string& text, std::size_t line)
{
    json j;
    try {
        j = json::parse(text);
    }
    catch (const json::parse_error& e) {
        throw ParseError(line, "<json>", e.what());
    }
    return record_from_json(j, line);
}

std::string record_to_json_line(const ConfigRecord& r)
{
    json j;
    j["config_id"] = r.config_id;
    j["dataset_id"] = r.dataset_id;
    j["domain_tag"] = std::string(to_string(r.domain_tag));
    j["discard_pct"] = r.discard_pct;
    json features = json::object();
    json mask = json::object();
    bool padded = false;
    for (std::size_t g = 0; g < kFeatureGroups; ++g) {
        const std::string name(kFeatureGroupNames[g]);
        features[name] = r.features.values[g];
        json bits = json::array();
        for (auto b : r.features.mask[g]) {
            bits.push_back(static_cast<int>(b));
            padded = padded || b == 0;
        }
        mask[name] = std::move(bits);
    }
    j["features"] = std::move(features);
    if (padded)
        j["mask"] = std::move(mask);
    j["hyperparams"] = {{"batch_size", r.hyperparams.batch_size}, {"learning_rate", r.hyperparams.learning_rate}};
    json curve = json::array();
    for (const auto& p : r.curve)
        curve.push_back({{"epoch", p.epoch}, {"accuracy", p.accuracy}, {"energy", p.energy}});
    j["curve"] = std::move(curve);
    return j.dump();
}

Corpus make_corpus(std::vector<ConfigRecord> records)
{
    Corpus c;
    for (const auto& r : records) {
        auto w = r.features.widths();
        for (std::size_t g = 0; g < kFeatureGroups; ++g)
            c.feature_widths[g] = std::max(c.feature_widths[g], w[g]);
    }
    std::set<RecordKey> seen;
    for (auto& r : records) {
        r.features = r.features.padded(c.feature_widths);
        if (!seen.insert(key_of(r)).second)
            throw InputError("duplicate record key (config_id '" + r.config_id + "', dataset_id '" + r.dataset_id
                             + "')");
    }
    c.records = std::move(records);
    return c;
}

Corpus read_corpus(std::istream& in)
{
    std::vector<ConfigRecord> records;
    std::optional<ScalingParams> scaling;
    std::optional<FeatureWidths> header_widths;
    std::set<RecordKey> seen;
    std::string text;
    std::size_t line = 0;
    bool first = true;
    while (std::getline(in, text)) {
        ++line;
        if (std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isspace(ch); }))
            continue;
        json j;
        try {
            j = json::parse(text);
        }
        catch (const json::parse_error& e) {
            throw ParseError(line, "<json>", e.what());
        }
        if (first && j.is_object() && j.contains("corpus_header")) {
            first = false;
            const auto& h = j["corpus_header"];
            if (h.contains("scaling"))
                scaling = scaling_from_json(h["scaling"], line);
            if (h.contains("feature_widths")) {
                FeatureWidths w{};
                for (std::size_t g = 0; g < kFeatureGroups; ++g)
                    w[g] = static_cast<std::size_t>(
                        require_integer(h["feature_widths"], std::string(kFeatureGroupNames[g]).c_str(), line));
                header_widths = w;
            }
            continue;
        }
        first = false;
        auto r = record_from_json(j, line);
        if (!seen.insert(key_of(r)).second)
            throw ParseError(line, "config_id", "duplicate record key (config_id '" + r.config_id
                                                    + "', dataset_id '" + r.dataset_id + "')");
        records.push_back(std::move(r));
    }
    if (records.empty())
        throw InputError("corpus is empty");

    Corpus c = make_corpus(std::move(records));
    if (header_widths) {
        for (std::size_t g = 0; g < kFeatureGroups; ++g)
            if ((*header_widths)[g] < c.feature_widths[g])
                throw InputError("corpus header feature widths are narrower than its records");
        for (auto& r : c.records)
            r.features = r.features.padded(*header_widths);
        c.feature_widths = *header_widths;
    }
    if (scaling) {
        for (const auto& id : c.dataset_ids())
            if (!scaling->per_dataset.contains(id))
                throw InputError("corpus header lacks scaling for dataset '" + id + "'");
    }
    c.scaling = std::move(scaling);
    return c;
}

Corpus load_corpus(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open corpus file '" + path.string() + "'");
    return read_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus)
{
    json header;
    header["feature_widths"] = widths_to_json(corpus.feature_widths);
    if (corpus.scaling)
        header["scaling"] = scaling_to_json(*corpus.scaling);
    out << json{{"corpus_header", header}}.dump() << '\n';
    for (const auto& r : corpus.records)
        out << record_to_json_line(r) << '\n';
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write corpus file '" + path.string() + "'");
    write_corpus(out, corpus);
}

NormalizeResult normalize_targets(const Corpus& corpus)
{
    if (corpus.empty())
        throw InputError("normalize_targets: empty corpus");

    NormalizeResult res;
    for (const auto& r : corpus.records) {
        auto [it, inserted] = res.scaling.per_dataset.try_emplace(r.dataset_id);
        auto& s = it->second;
        for (const auto& p : r.curve) {
            if (inserted) {
                s.energy_min = s.energy_max = p.energy;
                s.acc_min = s.acc_max = p.accuracy;
                inserted = false;
                continue;
            }
            s.energy_min = std::min(s.energy_min, p.energy);
            s.energy_max = std::max(s.energy_max, p.energy);
            s.acc_min = std::min(s.acc_min, p.accuracy);
            s.acc_max = std::max(s.acc_max, p.accuracy);
        }
    }
    for (auto& [id, s] : res.scaling.per_dataset) {
        if (s.energy_max == s.energy_min)
            res.warnings.push_back("dataset '" + id + "': degenerate energy range, all energies map to 0");
        if (s.acc_min < 0.0 || s.acc_max > 1.0) {
            s.acc_scaled = true;
            res.warnings.push_back("dataset '" + id + "': accuracy outside [0,1], applying min-max scaling");
            if (s.acc_max == s.acc_min)
                res.warnings.push_back("dataset '" + id + "': degenerate accuracy range, all accuracies map to 0");
        }
        else {
            s.acc_min = 0.0;
            s.acc_max = 1.0;
        }
    }

    res.corpus = corpus;
    for (auto& r : res.corpus.records) {
        const auto& s = res.scaling.per_dataset.at(r.dataset_id);
        for (auto& p : r.curve) {
            p.energy = s.normalize_energy(p.energy);
            p.accuracy = s.normalize_acc(p.accuracy);
        }
    }
    res.corpus.scaling = res.scaling;
    return res;
}

Corpus apply_scaling(const Corpus& corpus, const ScalingParams& scaling)
{
    Corpus out = corpus;
    for (auto& r : out.records) {
        const auto& s = scaling.at(r.dataset_id);
        for (auto& p : r.curve) {
            p.energy = s.normalize_energy(p.energy);
            p.accuracy = s.normalize_acc(p.accuracy);
        }
    }
    out.scaling = scaling;
    return out;
}

Corpus denormalize_targets(const Corpus& corpus, const ScalingParams& scaling)
{
    Corpus out = corpus;
    for (auto& r : out.records) {
        const auto& s = scaling.at(r.dataset_id);
        for (auto& p : r.curve) {
            p.energy = s.denormalize_energy(p.energy);
            p.accuracy = s.denormalize_acc(p.accuracy);
        }
    }
    out.scaling.reset();
    return out;
}

Split split_by_dataset(const Corpus& corpus, const std::set<std::string>& holdout_ids)
{
    auto present = corpus.dataset_ids();
    for (const auto& id : holdout_ids)
        if (!present.contains(id))
            throw InputError("holdout dataset '" + id + "' is not in the corpus");
    Split s;
    s.train.feature_widths = s.test.feature_widths = corpus.feature_widths;
    s.train.scaling = s.test.scaling = corpus.scaling;
    for (const auto& r : corpus.records)
        (holdout_ids.contains(r.dataset_id) ? s.test : s.train).records.push_back(r);
    return s;
}

void SynthSpec::validate() const
{
    if (n_configs < 1)
        throw InputError("n_configs must be >= 1");
    if (max_epoch < 1)
        throw InputError("max_epoch must be >= 1");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        throw InputError("noise sigma must be a non-negative finite number");
}

double CurveTruth::accuracy_at(int epoch) const
{
    return acc_max * (1.0 - std::exp(-rate * static_cast<double>(epoch)));
}

double CurveTruth::energy_at(int epoch) const
{
    return energy_per_epoch * static_cast<double>(epoch);
}

namespace {

constexpr std::array<int, 5> kSynthBatchSizes{32, 64, 128, 256, 512};
constexpr std::array<double, 3> kSynthLearningRates{1e-3, 1e-4, 1e-5};
constexpr std::array<double, 3> kSynthRateFactor{1.0, 0.6, 0.3};

double unit_draw(std::mt19937_64& rng)
{
    // 53 random bits, independent of the standard library's distribution implementation.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal_draw(std::mt19937_64& rng)
{
    // Box-Muller.
    double u1 = unit_draw(rng);
    double u2 = unit_draw(rng);
    if (u1 < 1e-300)
        u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::string synth_config_id(int i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "cfg-%04d", i);
    return buf;
}

} // namespace

SyntheticCorpus generate_synthetic(const SynthSpec& spec)
{
    spec.validate();
    std::mt19937_64 param_rng(spec.seed);
    std::mt19937_64 noise_rng(spec.seed ^ 0x9E3779B97F4A7C15ULL);

    SyntheticCorpus out;
    std::vector<ConfigRecord> records;
    for (int i = 0; i < spec.n_configs; ++i) {
        const double m0 = unit_draw(param_rng);
        const double m1 = unit_draw(param_rng);
        const double m2 = unit_draw(param_rng);
        const auto bs_idx = static_cast<std::size_t>(param_rng() % kSynthBatchSizes.size());
        const auto lr_idx = static_cast<std::size_t>(param_rng() % kSynthLearningRates.size());

        CurveTruth t;
        t.config_id = synth_config_id(i);
        t.acc_max = 0.55 + 0.4 * m0;
        t.rate = (0.05 + 0.45 * m1) * kSynthRateFactor[lr_idx];
        const double bs_factor = 1.5 - 0.125 * static_cast<double>(bs_idx);
        t.energy_per_epoch = (0.05 + 0.3 * m2 + 0.2 * m0) * bs_factor;

        ConfigRecord r;
        r.config_id = t.config_id;
        r.dataset_id = kSyntheticDatasetId;
        r.domain_tag = DomainTag::synthetic;
        r.discard_pct = 0.0;
        r.features = FeatureVector::from_values({std::vector<double>{1.0, 0.0}, std::vector<double>{0.5},
                                                 std::vector<double>{m0, m1, m2}, std::vector<double>{1.0}});
        r.hyperparams = {kSynthBatchSizes[bs_idx], kSynthLearningRates[lr_idx]};
        for (int e = 1; e <= spec.max_epoch; ++e) {
            double acc = t.accuracy_at(e);
            if (spec.noise_sigma > 0.0)
                acc = std::clamp(acc + spec.noise_sigma * normal_draw(noise_rng), 0.0, 1.0);
            r.curve.push_back({e, acc, t.energy_at(e)});
        }
        records.push_back(std::move(r));
        out.truth.push_back(std::move(t));
    }
    out.corpus = make_corpus(std::move(records));
    return out;
}

Corpus noiseless_corpus(const SyntheticCorpus& synth)
{
    Corpus c = synth.corpus;
    for (std::size_t i = 0; i < c.records.size(); ++i)
        for (auto& p : c.records[i].curve) {
            p.accuracy = synth.truth[i].accuracy_at(p.epoch);
            p.energy = synth.truth[i].energy_at(p.epoch);
        }
    return c;
}

} // namespace green
