// nilcorr command line: run experiment configs, emit CSV/JSON.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nilcorr/serialize.hpp"

namespace fs = std::filesystem;
using namespace nilcorr;

namespace {

struct RangeSpec {
    std::vector<std::pair<long long, long long>> dims; // [lo, hi) per dimension
};

RangeSpec parse_range(const std::string& text, const std::string& where) {
    RangeSpec out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto comma = text.find(',', pos);
        std::string part = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
        auto dots = part.find("..");
        if (dots == std::string::npos)
            throw Error(ErrorCode::Validation, "range must look like a..b", where);
        long long lo = std::stoll(part.substr(0, dots));
        long long hi = std::stoll(part.substr(dots + 2));
        if (hi <= lo) throw Error(ErrorCode::Validation, "empty range " + part, where);
        out.dims.emplace_back(lo, hi);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.dims.empty()) throw Error(ErrorCode::Validation, "empty range", where);
    return out;
}

std::vector<long long> parse_schedule(const std::string& text, const std::string& where) {
    std::vector<long long> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto comma = text.find(',', pos);
        out.push_back(std::stoll(text.substr(pos, comma == std::string::npos ? comma : comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw Error(ErrorCode::Validation, "empty schedule", where);
    return out;
}

void write_csv(const fs::path& path, const SequenceHandle& s, const RangeSpec& range) {
    if (static_cast<int>(range.dims.size()) != s.dim())
        throw Error(ErrorCode::DimensionMismatch, "range dimensions != sequence dimensions", "range");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Validation, "cannot open output " + path.string(), "out");
    const int d = s.dim();
    for (int i = 0; i < d; ++i) out << "n_" << (i + 1) << ",";
    out << "re,im\n";
    std::vector<Int> n(d);
    std::vector<long long> cur(d);
    for (int i = 0; i < d; ++i) cur[i] = range.dims[i].first;
    while (true) {
        for (int i = 0; i < d; ++i) n[i] = Int(cur[i]);
        Complex v = s.eval(n);
        for (int i = 0; i < d; ++i) out << cur[i] << ",";
        out << double_repr(v.real()) << "," << double_repr(v.imag()) << "\n";
        int axis = d - 1;
        while (axis >= 0) {
            if (++cur[axis] < range.dims[axis].second) break;
            cur[axis] = range.dims[axis].first;
            --axis;
        }
        if (axis < 0) break;
    }
}

void write_json(const fs::path& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Validation, "cannot open output " + path.string(), "out");
    out << j.dump(2) << "\n";
}

Json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Validation, "cannot read config " + path, "config");
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::Validation, std::string("config is not valid JSON: ") + e.what(), "config");
    }
    int version = j.value("schema_version", -1);
    if (version != kSchemaVersion)
        throw Error(ErrorCode::Validation,
                    "unsupported schema_version " + std::to_string(version), "config.schema_version");
    return j;
}

const Json& section(const Json& config, const std::string& name) {
    if (!config.contains(name))
        throw Error(ErrorCode::Validation, "config lacks the '" + name + "' section", "config." + name);
    return config.at(name);
}

BasesSpec bases_from_json(const Json& j, std::uint64_t seed, int d) {
    BasesSpec bases;
    bases.seed = seed;
    if (j.contains("bases")) {
        const Json& b = j.at("bases");
        bases.include_zero = b.value("include_zero", true);
        bases.random_count = b.value("random_count", 8);
        bases.max_magnitude = b.value("max_magnitude", 1000000LL);
        if (b.contains("adversarial"))
            for (const auto& row : b.at("adversarial")) {
                std::vector<Int> base;
                for (const auto& x : row) base.push_back(Int(x.get<long long>()));
                if (static_cast<int>(base.size()) != d)
                    throw Error(ErrorCode::Validation, "adversarial base has wrong dimension",
                                "config.bases.adversarial");
                bases.adversarial.push_back(std::move(base));
            }
    }
    return bases;
}

SequenceHandle density_source(const Json& j, const BasisPtr& basis) {
    const Json& src = section(j, "source");
    std::string kind = src.at("kind").get<std::string>();
    if (kind == "wiener_residual") {
        TorusMeasure mu = measure_from_json(src.at("measure"), basis, "density.source.measure");
        return wiener_decompose(mu).residual;
    }
    if (kind == "fourier") {
        TorusMeasure mu = measure_from_json(src.at("measure"), basis, "density.source.measure");
        return fourier_sequence(mu);
    }
    if (kind == "nilseq") {
        NilFunction f = nilfunction_from_json(src.at("function"), basis, "density.source.function");
        PolySequence g = polyseq_from_json(src.at("sequence"), basis, "density.source.sequence");
        GroupElement x0 = src.contains("x0") ? element_from_json(src.at("x0"), basis, "density.source.x0")
                                             : GroupElement::identity(g.presentation());
        return nilsequence(f, g, x0);
    }
    if (kind == "correlate")
        return correlate(spec_from_json(src.at("spec"), basis, "density.source.spec"));
    throw Error(ErrorCode::Validation, "unknown density source '" + kind + "'", "density.source.kind");
}

int run_selftest();

int run(int argc, char** argv) {
    CLI::App app{"nilmanifold correlation toolbox"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", range_text, schedule_text;
    std::uint64_t seed = 0;
    for (const char* name : {"nilseq", "gpoly", "correlate", "decompose", "wiener", "density"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path)->required();
        sub->add_option("--out", out_dir);
        sub->add_option("--seed", seed);
        sub->add_option("--range", range_text);
        sub->add_option("--schedule", schedule_text);
    }
    app.add_subcommand("selftest", "run the built-in invariant suite");

    CLI11_PARSE(app, argc, argv);
    auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();

    if (name == "selftest") return run_selftest();

    Json config = load_config(config_path);
    BasisPtr basis = config.contains("basis") ? basis_from_json(config.at("basis")) : nullptr;
    fs::path out(out_dir);
    fs::create_directories(out);

    auto range_or = [&](const char* key, int d) {
        if (!range_text.empty()) return parse_range(range_text, "--range");
        if (config.contains(key) && config.at(key).contains("range"))
            return parse_range(config.at(key).at("range").get<std::string>(), "config.range");
        RangeSpec r;
        for (int i = 0; i < d; ++i) r.dims.emplace_back(0, 256);
        return r;
    };
    auto schedule_or = [&](const Json& sec, std::vector<long long> fallback) {
        if (!schedule_text.empty()) return parse_schedule(schedule_text, "--schedule");
        if (sec.contains("schedule")) return sec.at("schedule").get<std::vector<long long>>();
        return fallback;
    };

    if (name == "nilseq") {
        const Json& sec = section(config, "nilseq");
        NilFunction f = nilfunction_from_json(sec.at("function"), basis, "nilseq.function");
        PolySequence g = polyseq_from_json(sec.at("sequence"), basis, "nilseq.sequence");
        GroupElement x0 = sec.contains("x0") ? element_from_json(sec.at("x0"), basis, "nilseq.x0")
                                             : GroupElement::identity(g.presentation());
        auto handle = nilsequence(f, g, x0);
        write_csv(out / "sequence.csv", handle, range_or("nilseq", handle.dim()));
        return 0;
    }
    if (name == "gpoly") {
        const Json& sec = section(config, "gpoly");
        int d = sec.value("d", 1);
        GPoly p = GPoly::parse(sec.at("expr").get<std::string>(), d, basis);
        SequenceHandle handle(d, 0.0, [p](std::span<const Int> n) {
            return Complex(p.eval(n).to_double(), 0.0);
        });
        write_csv(out / "values.csv", handle, range_or("gpoly", d));
        return 0;
    }
    if (name == "correlate") {
        CorrelationSpec spec = spec_from_json(section(config, "correlate"), basis, "correlate");
        auto phi = correlate(spec);
        write_csv(out / "correlation.csv", phi, range_or("correlate", phi.dim()));
        return 0;
    }
    if (name == "decompose") {
        const Json& sec = section(config, "decompose");
        CorrelationSpec spec = spec_from_json(sec.at("spec"), basis, "decompose.spec");
        DecomposeOptions opt;
        opt.schedule = schedule_or(sec, {100, 1000});
        opt.threshold = sec.value("threshold", 0.05);
        opt.atom_threshold = sec.value("atom_threshold", 1e-3);
        opt.bases = bases_from_json(sec, seed, spec.param_dim());
        Decomposition dec = decompose(spec, opt);
        RangeSpec range = range_or("decompose", spec.param_dim());
        write_csv(out / "correlation.csv", correlate(spec), range);
        write_csv(out / "nil.csv", dec.nil_part, range);
        write_csv(out / "null.csv", dec.null_part, range);
        Json report = decay_report_to_json(dec.report);
        report["reconstruction_max_err"] = dec.reconstruction_max_err;
        report["period"] = dec.period.str();
        report["orbit_cosets"] = dec.orbit_cosets.str();
        if (spec.complexity_hint) {
            report["complexity_hint"] = *spec.complexity_hint;
            report["step_bound_2(c+1)s"] =
                2 * (*spec.complexity_hint + 1) *
                std::max(1, spec.polynomials.empty() ? 1 : spec.polynomials.front().degree());
        }
        write_json(out / "report.json", report);
        return 0;
    }
    if (name == "wiener") {
        const Json& sec = section(config, "wiener");
        TorusMeasure mu = measure_from_json(sec.at("measure"), basis, "wiener.measure");
        auto wd = wiener_decompose(mu);
        RangeSpec range = range_or("wiener", 1);
        write_csv(out / "transform.csv", fourier_sequence(mu), range);
        write_csv(out / "ap.csv", wd.almost_periodic, range);
        write_csv(out / "residual.csv", wd.residual, range);
        auto schedule = schedule_or(sec, {1000, 10000});
        auto report = null_diagnostic(wd.residual, schedule, bases_from_json(sec, seed, 1),
                                      sec.value("threshold", 0.05), AverageMode::Abs2);
        Json j = decay_report_to_json(report);
        j["total_mass"] = mu.total_mass();
        j["atomic_mass"] = mu.atomic_mass();
        write_json(out / "report.json", j);
        return 0;
    }
    if (name == "density") {
        const Json& sec = section(config, "density");
        SequenceHandle s = density_source(sec, basis);
        auto schedule = schedule_or(sec, {100, 1000});
        AverageMode mode = AverageMode::Abs;
        std::string mode_name = sec.value("mode", "abs");
        if (mode_name == "abs2") mode = AverageMode::Abs2;
        else if (mode_name == "plain") mode = AverageMode::Plain;
        else if (mode_name != "abs")
            throw Error(ErrorCode::Validation, "mode must be plain, abs or abs2", "density.mode");
        auto report = null_diagnostic(s, schedule, bases_from_json(sec, seed, s.dim()),
                                      sec.value("threshold", 0.05), mode);
        write_json(out / "report.json", decay_report_to_json(report));
        return 0;
    }
    throw Error(ErrorCode::Validation, "unknown subcommand", name);
}

// Small built-in invariant suite; the full property suites live in the tests.
int run_selftest() {
    int failures = 0;
    auto check = [&](const char* label, bool ok) {
        std::cout << (ok ? "ok   " : "FAIL ") << label << "\n";
        if (!ok) ++failures;
    };
    auto basis = make_basis({"b1"}, {"0.41421356237309504880168872420969807856967187537694"});
    auto h3 = GroupPresentation::heisenberg3();
    SplitMix64 rng(7);
    auto rand_el = [&] {
        std::vector<Scalar> c;
        for (int i = 0; i < 3; ++i)
            c.push_back(Scalar(Rational(rng.symmetric(40), 1 + static_cast<long long>(rng.bounded(7)))));
        return GroupElement(h3, std::move(c));
    };

    bool assoc = true, inv = true, pow_ok = true, red = true;
    for (int t = 0; t < 100; ++t) {
        auto a = rand_el(), b = rand_el(), c = rand_el();
        if (!(multiply(multiply(a, b), c) == multiply(a, multiply(b, c)))) assoc = false;
        if (!multiply(a, inverse(a)).is_identity()) inv = false;
        GroupElement it = GroupElement::identity(h3);
        for (int n = 0; n < 7; ++n) it = multiply(it, a);
        if (!(power(a, 7ll) == it)) pow_ok = false;
        std::vector<Scalar> g(3);
        for (int i = 0; i < 3; ++i) g[i] = Scalar(Rational(rng.symmetric(5)));
        auto q1 = reduce_mod_lattice(a).q;
        auto q2 = reduce_mod_lattice(multiply(a, GroupElement(h3, g))).q;
        if (!(q1 == q2)) red = false;
    }
    check("heisenberg associativity (100 random triples)", assoc);
    check("inverse law", inv);
    check("power vs iterated multiply", pow_ok);
    check("cube reduction is Γ-invariant", red);

    auto oc = orbit_closure_torus({Scalar::basis_element(basis, 0), Scalar(Rational(1, 2))}, 2);
    check("orbit closure (β,1/2): one-dimensional, two cosets",
          oc.subtorus.dimension() == 1 && oc.cosets == 2);

    TorusMeasure mu;
    mu.add_atom(Scalar(Rational(1, 3)), 0.5);
    mu.set_ac({{0, Complex(0.5, 0.0)}});
    check("wiener: phi(0) = total mass", std::abs(mu.fourier(0) - Complex(1.0)) < 1e-14);

    auto t1 = GroupPresentation::torus(1);
    NilFunction f0(t1);
    f0.add_character({Int(-1)});
    NilFunction f1(t1);
    f1.add_character({Int(1)});
    CorrelationSpec spec{MPSystem::torus_rotation({Scalar::basis_element(basis, 0)}),
                         {f0, f1},
                         {IntPolynomial::variable(1, 0)},
                         std::nullopt};
    auto dec = decompose(spec);
    bool rot_ok = dec.report.verdict == DecayVerdict::Null;
    for (long long n : {1LL, 17LL, 251LL}) {
        Complex expect = scalar_unit_phase(Scalar::basis_element(basis, 0) * Scalar(Rational(n)));
        if (std::abs(dec.nil_part.eval1(Int(n)) - expect) > 1e-12) rot_ok = false;
    }
    check("rotation correlation decomposes as pure nilsequence", rot_ok);

    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        Json err{{"code", error_code_name(e.code())}, {"message", e.message()}, {"location", e.location()}};
        std::cerr << err.dump() << "\n";
        switch (e.code()) {
            case ErrorCode::ResidualNotNull:
            case ErrorCode::QuadratureNotConverged:
                return 3;
            case ErrorCode::Validation:
            case ErrorCode::DimensionMismatch:
            case ErrorCode::PresentationMismatch:
                return 2;
            default:
                return 1;
        }
    } catch (const std::exception& e) {
        Json err{{"code", "Internal"}, {"message", e.what()}, {"location", ""}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
