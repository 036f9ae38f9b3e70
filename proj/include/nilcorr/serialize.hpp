#pragma once

#include <charconv>
#include <string>

#include <json.hpp>

#include "nilcorr/corr.hpp"
#include "nilcorr/gpoly.hpp"
#include "nilcorr/measures.hpp"

namespace nilcorr {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Shortest round-trip decimal of a binary64 (CSV and JSON payloads must be
/// byte-identical across runs).
inline std::string double_repr(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ----------------------------- scalars, bases -----------------------------

inline Json basis_to_json(const BasisPtr& basis) {
    Json arr = Json::array();
    if (basis)
        for (std::size_t i = 0; i < basis->size(); ++i)
            arr.push_back({{"name", basis->symbol(i)}, {"witness", basis->witness_strings()[i]}});
    return Json{{"symbols", arr}};
}

inline BasisPtr basis_from_json(const Json& j, const std::string& where = "basis") {
    if (j.is_null()) return nullptr;
    std::vector<std::string> names, witnesses;
    for (const auto& entry : j.at("symbols")) {
        names.push_back(entry.at("name").get<std::string>());
        witnesses.push_back(entry.at("witness").get<std::string>());
    }
    if (names.empty()) return nullptr;
    try {
        return make_basis(std::move(names), std::move(witnesses));
    } catch (const Error& e) {
        throw Error(e.code(), e.message(), where);
    }
}

inline Json scalar_to_json(const Scalar& s) {
    Json terms = Json::object();
    for (const auto& [mono, c] : s.terms()) {
        if (mono.empty()) continue;
        terms[s.monomial_name(mono)] = rational_to_string(c);
    }
    Json out{{"q0", rational_to_string(s.q0())}};
    if (!terms.empty()) out["terms"] = terms;
    return out;
}

inline Scalar scalar_from_json(const Json& j, const BasisPtr& basis, const std::string& where) {
    if (j.is_string()) return Scalar(parse_rational(j.get<std::string>(), where));
    if (j.is_number_integer()) return Scalar(Rational(j.get<long long>()));
    Scalar out(parse_rational(j.value("q0", "0"), where));
    if (j.contains("terms")) {
        for (const auto& [key, val] : j.at("terms").items()) {
            Scalar::Monomial mono;
            std::size_t pos = 0;
            while (pos < key.size()) {
                auto star = key.find('*', pos);
                std::string name = key.substr(pos, star == std::string::npos ? star : star - pos);
                if (!basis)
                    throw Error(ErrorCode::Validation, "scalar uses symbol '" + name +
                                                            "' but no basis is declared",
                                where + ".terms." + key);
                int idx = basis->find(name);
                if (idx < 0)
                    throw Error(ErrorCode::Validation, "undeclared basis symbol '" + name + "'",
                                where + ".terms." + key);
                mono.push_back(static_cast<std::uint32_t>(idx));
                if (star == std::string::npos) break;
                pos = star + 1;
            }
            std::sort(mono.begin(), mono.end());
            out += Scalar::monomial(basis, std::move(mono),
                                    parse_rational(val.get<std::string>(), where + ".terms." + key));
        }
    }
    return out;
}

// ------------------------------ presentations ------------------------------

inline Json presentation_to_json(const PresentationPtr& p) {
    switch (p->kind()) {
        case GroupKind::Torus: return Json{{"kind", "torus"}, {"dim", p->dim()}, {"step", p->step()}};
        case GroupKind::Heisenberg3: return Json{{"kind", "heisenberg3"}, {"step", p->step()}};
        case GroupKind::DirectProduct: {
            Json fs = Json::array();
            for (const auto& f : p->factors()) fs.push_back(presentation_to_json(f));
            return Json{{"kind", "product"}, {"factors", fs}, {"step", p->step()}};
        }
    }
    return {};
}

inline PresentationPtr presentation_from_json(const Json& j, const std::string& where) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "torus") return GroupPresentation::torus(j.at("dim").get<int>());
    if (kind == "heisenberg3") return GroupPresentation::heisenberg3();
    if (kind == "product") {
        std::vector<PresentationPtr> fs;
        for (const auto& f : j.at("factors")) fs.push_back(presentation_from_json(f, where));
        return GroupPresentation::product(std::move(fs));
    }
    throw Error(ErrorCode::Validation, "unknown presentation kind '" + kind + "'", where);
}

inline Json element_to_json(const GroupElement& a) {
    Json coords = Json::array();
    for (const auto& c : a.coords()) coords.push_back(scalar_to_json(c));
    return Json{{"presentation", presentation_to_json(a.presentation())}, {"coords", coords}};
}

inline GroupElement element_from_json(const Json& j, const BasisPtr& basis, const std::string& where) {
    auto pres = presentation_from_json(j.at("presentation"), where + ".presentation");
    std::vector<Scalar> coords;
    int i = 0;
    for (const auto& c : j.at("coords"))
        coords.push_back(scalar_from_json(c, basis, where + ".coords[" + std::to_string(i++) + "]"));
    return GroupElement(std::move(pres), std::move(coords));
}

// ------------------------------- polynomials -------------------------------

inline Json intpoly_to_json(const IntPolynomial& p) {
    Json terms = Json::array();
    for (const auto& [idx, c] : p.terms()) {
        Json e = Json::array();
        for (auto m : idx) e.push_back(m);
        terms.push_back({{"idx", e}, {"coeff", c.str()}});
    }
    return Json{{"d", p.dim()}, {"terms", terms}};
}

inline IntPolynomial intpoly_from_json(const Json& j, const std::string& where) {
    IntPolynomial p(j.at("d").get<int>());
    for (const auto& t : j.at("terms")) {
        MultiIndex idx;
        for (const auto& m : t.at("idx")) idx.push_back(m.get<std::uint32_t>());
        p.add_term(idx, Int(t.at("coeff").get<std::string>()));
    }
    (void)where;
    return p;
}

inline Json polyseq_to_json(const PolySequence& g) {
    Json factors = Json::array();
    for (const auto& f : g.factors()) {
        Json coords = Json::array();
        for (const auto& c : f.base.coords()) coords.push_back(scalar_to_json(c));
        factors.push_back({{"base", coords}, {"exponent", intpoly_to_json(f.exponent)}});
    }
    return Json{{"presentation", presentation_to_json(g.presentation())},
                {"d", g.dim()},
                {"factors", factors}};
}

inline PolySequence polyseq_from_json(const Json& j, const BasisPtr& basis, const std::string& where) {
    auto pres = presentation_from_json(j.at("presentation"), where + ".presentation");
    PolySequence g(pres, j.at("d").get<int>());
    int fi = 0;
    for (const auto& f : j.at("factors")) {
        std::vector<Scalar> coords;
        int ci = 0;
        for (const auto& c : f.at("base"))
            coords.push_back(scalar_from_json(c, basis, where + ".factors[" + std::to_string(fi) +
                                                             "].base[" + std::to_string(ci++) + "]"));
        g.push_factor(GroupElement(pres, std::move(coords)),
                      intpoly_from_json(f.at("exponent"), where + ".factors"));
        ++fi;
    }
    return g;
}

// ------------------------------ nil functions ------------------------------

inline Json nilfunction_to_json(const NilFunction& f) {
    Json terms = Json::array();
    for (const auto& t : f.terms()) {
        Json freq = Json::array();
        for (const auto& m : t.freq) freq.push_back(m.str());
        Json term{{"coeff", {{"re", t.coeff.real()}, {"im", t.coeff.imag()}}}, {"freq", freq}};
        if (!t.pp.trivial()) {
            Json pieces = Json::array();
            for (const auto& [box, poly] : t.pp.pieces()) {
                Json jbox = Json::array();
                for (const auto& [lo, hi] : box.intervals)
                    jbox.push_back(Json::array({rational_to_string(lo), rational_to_string(hi)}));
                Json jterms = Json::array();
                for (const auto& [e, c] : poly.terms()) {
                    Json je = Json::array();
                    for (auto m : e) je.push_back(m);
                    jterms.push_back({{"idx", je}, {"coeff", rational_to_string(c)}});
                }
                pieces.push_back({{"box", jbox}, {"poly", jterms}});
            }
            term["pp"] = pieces;
        }
        terms.push_back(std::move(term));
    }
    return Json{{"presentation", presentation_to_json(f.presentation())}, {"terms", terms}};
}

inline NilFunction nilfunction_from_json(const Json& j, const BasisPtr& basis, const std::string& where) {
    auto pres = presentation_from_json(j.at("presentation"), where + ".presentation");
    NilFunction f(pres);
    for (const auto& t : j.at("terms")) {
        NilFunction::Term term;
        term.coeff = Complex(t.at("coeff").value("re", 0.0), t.at("coeff").value("im", 0.0));
        for (const auto& m : t.at("freq")) {
            if (m.is_string()) term.freq.push_back(Int(m.get<std::string>()));
            else term.freq.push_back(Int(m.get<long long>()));
        }
        term.pp = PiecewisePoly(pres->dim());
        if (t.contains("pp")) {
            for (const auto& piece : t.at("pp")) {
                RatBox box;
                for (const auto& iv : piece.at("box"))
                    box.intervals.emplace_back(parse_rational(iv.at(0).get<std::string>(), where),
                                               parse_rational(iv.at(1).get<std::string>(), where));
                RatPoly poly(pres->dim());
                for (const auto& pt : piece.at("poly")) {
                    MultiIndex e;
                    for (const auto& m : pt.at("idx")) e.push_back(m.get<std::uint32_t>());
                    poly.set_term(std::move(e), parse_rational(pt.at("coeff").get<std::string>(), where));
                }
                term.pp.add_piece(std::move(box), std::move(poly));
            }
        }
        f.add_term(std::move(term));
    }
    return f;
}

// -------------------------------- measures ---------------------------------

inline Json measure_to_json(const TorusMeasure& mu) {
    Json atoms = Json::array();
    for (const auto& a : mu.atoms())
        atoms.push_back({{"loc", scalar_to_json(a.location)}, {"mass", a.mass}});
    Json out{{"atoms", atoms}};
    if (!mu.ac().empty()) {
        Json freqs = Json::object();
        for (const auto& [m, c] : mu.ac())
            freqs[std::to_string(m)] = Json{{"re", c.real()}, {"im", c.imag()}};
        out["ac"] = Json{{"freqs", freqs}};
    }
    if (mu.singular()) {
        const auto& ifs = *mu.singular();
        Json tr = Json::array();
        for (const auto& t : ifs.translations) tr.push_back(rational_to_string(t));
        out["ifs"] = Json{{"s", ifs.contraction.str()},
                          {"translations", tr},
                          {"weights", ifs.weights},
                          {"mass", ifs.mass}};
    }
    return out;
}

inline TorusMeasure measure_from_json(const Json& j, const BasisPtr& basis, const std::string& where) {
    TorusMeasure mu;
    if (j.contains("atoms"))
        for (const auto& a : j.at("atoms"))
            mu.add_atom(scalar_from_json(a.at("loc"), basis, where + ".atoms"), a.at("mass").get<double>());
    if (j.contains("ac")) {
        std::map<long long, Complex> freqs;
        for (const auto& [key, val] : j.at("ac").at("freqs").items())
            freqs[std::stoll(key)] = Complex(val.value("re", 0.0), val.value("im", 0.0));
        mu.set_ac(std::move(freqs));
    }
    if (j.contains("ifs")) {
        const auto& ifs = j.at("ifs");
        SelfSimilarPart part;
        part.contraction = Int(ifs.at("s").get<std::string>());
        for (const auto& t : ifs.at("translations"))
            part.translations.push_back(parse_rational(t.get<std::string>(), where + ".ifs"));
        part.weights = ifs.at("weights").get<std::vector<double>>();
        part.mass = ifs.value("mass", 1.0);
        mu.set_singular(std::move(part));
    }
    return mu;
}

// --------------------------------- systems ---------------------------------

inline Json system_to_json(const MPSystem& sys) {
    switch (sys.kind()) {
        case MPSystem::Kind::TorusRotation: {
            Json alpha = Json::array();
            for (const auto& a : sys.alpha()) alpha.push_back(scalar_to_json(a));
            return Json{{"kind", "torus_rotation"}, {"alpha", alpha}};
        }
        case MPSystem::Kind::SkewProduct:
            return Json{{"kind", "skew_product"}, {"alpha", scalar_to_json(sys.skew_alpha())}};
        case MPSystem::Kind::NilTranslation:
            return Json{{"kind", "nil_translation"},
                        {"presentation", presentation_to_json(sys.phase_presentation())},
                        {"a", element_to_json(sys.translation())}};
        case MPSystem::Kind::ConvexCombination:
        case MPSystem::Kind::ParametrizedFamily: {
            Json members = Json::array();
            for (const auto& [w, m] : sys.members())
                members.push_back({{"weight", w}, {"system", system_to_json(m)}});
            return Json{{"kind", sys.kind() == MPSystem::Kind::ConvexCombination
                                     ? "convex_combination"
                                     : "parametrized_family"},
                        {"members", members}};
        }
    }
    return {};
}

inline MPSystem system_from_json(const Json& j, const BasisPtr& basis, const std::string& where) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "torus_rotation") {
        std::vector<Scalar> alpha;
        int i = 0;
        for (const auto& a : j.at("alpha"))
            alpha.push_back(scalar_from_json(a, basis, where + ".alpha[" + std::to_string(i++) + "]"));
        return MPSystem::torus_rotation(std::move(alpha));
    }
    if (kind == "skew_product")
        return MPSystem::skew_product(scalar_from_json(j.at("alpha"), basis, where + ".alpha"));
    if (kind == "nil_translation") {
        auto pres = presentation_from_json(j.at("presentation"), where + ".presentation");
        auto a = element_from_json(j.at("a"), basis, where + ".a");
        return MPSystem::nil_translation(std::move(pres), std::move(a));
    }
    if (kind == "convex_combination" || kind == "parametrized_family") {
        std::vector<std::pair<double, MPSystem>> members;
        int i = 0;
        for (const auto& m : j.at("members")) {
            members.emplace_back(m.at("weight").get<double>(),
                                 system_from_json(m.at("system"), basis,
                                                  where + ".members[" + std::to_string(i++) + "]"));
        }
        return kind == "convex_combination" ? MPSystem::convex_combination(std::move(members))
                                            : MPSystem::parametrized_family(std::move(members));
    }
    // Uniform grid shorthand for families of rotations.
    if (kind == "rotation_grid") {
        long long count = j.at("count").get<long long>();
        std::vector<std::pair<double, MPSystem>> members;
        members.reserve(count);
        for (long long i = 0; i < count; ++i)
            members.emplace_back(1.0 / static_cast<double>(count),
                                 MPSystem::torus_rotation({Scalar(Rational(i, count))}));
        return MPSystem::parametrized_family(std::move(members));
    }
    throw Error(ErrorCode::Validation, "unknown system kind '" + kind + "'", where);
}

inline Json spec_to_json(const CorrelationSpec& spec) {
    Json obs = Json::array();
    for (const auto& f : spec.observables) obs.push_back(nilfunction_to_json(f));
    Json polys = Json::array();
    for (const auto& p : spec.polynomials) polys.push_back(intpoly_to_json(p));
    Json out{{"system", system_to_json(spec.system)}, {"observables", obs}, {"polynomials", polys}};
    if (spec.complexity_hint) out["complexity_hint"] = *spec.complexity_hint;
    return out;
}

inline CorrelationSpec spec_from_json(const Json& j, const BasisPtr& basis, const std::string& where) {
    CorrelationSpec spec{system_from_json(j.at("system"), basis, where + ".system"), {}, {}, std::nullopt};
    int i = 0;
    for (const auto& f : j.at("observables"))
        spec.observables.push_back(
            nilfunction_from_json(f, basis, where + ".observables[" + std::to_string(i++) + "]"));
    i = 0;
    for (const auto& p : j.at("polynomials"))
        spec.polynomials.push_back(
            intpoly_from_json(p, where + ".polynomials[" + std::to_string(i++) + "]"));
    if (j.contains("complexity_hint")) spec.complexity_hint = j.at("complexity_hint").get<int>();
    spec.validate();
    return spec;
}

// --------------------------------- reports ---------------------------------

inline Json decay_report_to_json(const DecayReport& r) {
    Json bases = Json::array();
    for (const auto& b : r.bases_used) {
        Json row = Json::array();
        for (const auto& x : b) row.push_back(x.str());
        bases.push_back(row);
    }
    return Json{{"schedule", r.schedule},
                {"worst_avg", r.worst_avg},
                {"verdict", verdict_name(r.verdict)},
                {"threshold", r.threshold},
                {"bases_used", bases}};
}

} // namespace nilcorr
