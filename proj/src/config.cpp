#include "oadesign/config.hpp"

#include <fstream>
#include <sstream>

#include "oadesign/errors.hpp"

namespace oadesign {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& doc, const char* key, T fallback)
{
    if (!doc.contains(key) || doc.at(key).is_null()) {
        return fallback;
    }
    return doc.at(key).get<T>();
}

std::vector<Index> one_based_list(const json& arr, Index upper, const std::string& what)
{
    if (!arr.is_array()) {
        throw SpecificationError(what + " must be a list of 1-based indices");
    }
    std::vector<Index> out;
    for (const auto& v : arr) {
        const auto i = v.get<Index>();
        if (i < 1 || i > upper) {
            throw SpecificationError(what + " index " + std::to_string(i) + " is outside 1.." + std::to_string(upper));
        }
        out.push_back(i - 1);
    }
    return out;
}

std::vector<Factor> parse_factors(const json& doc)
{
    std::vector<Factor> factors;
    if (doc.is_number_integer()) {
        const int n = doc.get<int>();
        if (n < 1) {
            throw SpecificationError("factor count must be positive");
        }
        for (int i = 0; i < n; ++i) {
            factors.push_back({"a" + std::to_string(i + 1), {-1.0, 1.0}});
        }
        return factors;
    }
    if (!doc.is_array() || doc.empty()) {
        throw SpecificationError("'factors' must be a positive count or a non-empty list");
    }
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& f = doc[i];
        Factor factor;
        factor.name = get_or<std::string>(f, "name", "a" + std::to_string(i + 1));
        factor.levels = get_or<std::vector<double>>(f, "levels", {-1.0, 1.0});
        for (char ch : factor.name) {
            if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') {
                throw SpecificationError("factor name '" + factor.name + "' must be alphanumeric");
            }
        }
        factors.push_back(std::move(factor));
    }
    return factors;
}

} // namespace

ModelTerm parse_term(const json& term, const std::vector<Factor>& factors)
{
    if (term.is_array()) {
        return ModelTerm{term.get<std::vector<int>>()};
    }
    if (!term.is_string()) {
        throw SpecificationError("a term must be an exponent list or a monomial string");
    }
    const auto text = term.get<std::string>();
    ModelTerm out{std::vector<int>(factors.size(), 0)};
    if (text == "1") {
        return out;
    }
    std::istringstream parts(text);
    std::string token;
    while (std::getline(parts, token, '*')) {
        int power = 1;
        if (const auto caret = token.find('^'); caret != std::string::npos) {
            try {
                power = std::stoi(token.substr(caret + 1));
            } catch (const std::exception&) {
                throw SpecificationError("bad exponent in term '" + text + "'");
            }
            token = token.substr(0, caret);
        }
        std::size_t f = 0;
        while (f < factors.size() && factors[f].name != token) {
            ++f;
        }
        if (f == factors.size()) {
            throw SpecificationError("term '" + text + "' names unknown factor '" + token + "'");
        }
        out.exponents[f] += power;
    }
    return out;
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir)
{
    try {
        RunConfig c;
        if (!doc.is_object()) {
            throw SpecificationError("config must be a JSON object");
        }
        c.factors = parse_factors(doc.at("factors"));

        if (!doc.contains("terms")) {
            throw SpecificationError("config needs 'terms'");
        }
        for (const auto& t : doc.at("terms")) {
            c.terms.push_back(parse_term(t, c.factors));
        }
        const auto term_count = static_cast<Index>(c.terms.size());
        if (doc.contains("targets")) {
            c.targets = one_based_list(doc.at("targets"), term_count, "target");
        } else {
            for (Index j = 0; j < term_count; ++j) {
                if (!c.terms[static_cast<std::size_t>(j)].is_intercept()) {
                    c.targets.push_back(j);
                }
            }
        }

        if (doc.contains("candidates")) {
            const auto pts = doc.at("candidates").get<std::vector<std::vector<double>>>();
            Eigen::MatrixXd m(static_cast<Index>(c.factors.size()), static_cast<Index>(pts.size()));
            for (std::size_t g = 0; g < pts.size(); ++g) {
                if (pts[g].size() != c.factors.size()) {
                    throw SpecificationError("candidate " + std::to_string(g + 1) + " has the wrong length");
                }
                for (std::size_t f = 0; f < pts[g].size(); ++f) {
                    m(static_cast<Index>(f), static_cast<Index>(g)) = pts[g][f];
                }
            }
            c.candidates = std::move(m);
        }
        c.multiplicities = get_or<std::vector<int>>(doc, "multiplicities", {});

        const auto mode = get_or<std::string>(doc, "mode", "constrained");
        if (mode == "constrained") {
            c.mode = SolveMode::constrained;
        } else if (mode == "relaxed") {
            c.mode = SolveMode::relaxed;
        } else {
            throw SpecificationError("mode must be 'constrained' or 'relaxed'");
        }
        if (doc.contains("kappa")) {
            const auto& k = doc.at("kappa");
            c.kappa = k.is_array() ? k.get<std::vector<double>>() : std::vector<double>{k.get<double>()};
        }

        if (doc.contains("lambda")) {
            const auto& l = doc.at("lambda");
            if (l.is_string()) {
                if (l.get<std::string>() != "auto") {
                    throw SpecificationError("lambda must be \"auto\", a list, or {\"file\": path}");
                }
            } else if (l.is_array()) {
                c.lambdas = l.get<std::vector<double>>();
            } else if (l.is_object() && l.contains("file")) {
                c.lambdas = load_lambda_file(base_dir / l.at("file").get<std::string>());
            } else {
                throw SpecificationError("lambda must be \"auto\", a list, or {\"file\": path}");
            }
        }
        c.lambda_scale = get_or<double>(doc, "lambda_scale", 1.0);

        c.seed = get_or<std::uint64_t>(doc, "seed", 0);
        const auto tie = get_or<std::string>(doc, "tie_break", "smallest_index");
        if (tie == "smallest_index") {
            c.tie_break = TieBreak::Kind::smallest_index;
        } else if (tie == "random") {
            c.tie_break = TieBreak::Kind::seeded_random;
        } else {
            throw SpecificationError("tie_break must be 'smallest_index' or 'random'");
        }
        c.sigma_sq = get_or<double>(doc, "sigma_sq", 1.0);

        if (doc.contains("solver")) {
            const auto& s = doc.at("solver");
            c.solver.primal_tol = get_or<double>(s, "primal_tol", c.solver.primal_tol);
            c.solver.dual_tol = get_or<double>(s, "dual_tol", c.solver.dual_tol);
            c.solver.max_iterations = get_or<int>(s, "max_iterations", c.solver.max_iterations);
            c.solver.support_threshold = get_or<double>(s, "support_threshold", c.solver.support_threshold);
            c.solver.penalty_parameter = get_or<double>(s, "penalty_parameter", c.solver.penalty_parameter);
            const auto init = get_or<std::string>(s, "initialization", "zero");
            if (init == "zero") {
                c.solver.initialization = Initialization::zero;
            } else if (init == "least_squares") {
                c.solver.initialization = Initialization::least_squares;
            } else {
                throw SpecificationError("solver.initialization must be 'zero' or 'least_squares'");
            }
        }
        c.solver.validate();

        // Checks that depend on G.
        c.model_spec();
        const CandidateSet cands = c.candidate_set();
        const Index g = cands.size();
        if (c.lambdas && static_cast<Index>(c.lambdas->size()) != g) {
            throw SpecificationError("explicit lambda list has " + std::to_string(c.lambdas->size()) +
                                     " entries, expected G = " + std::to_string(g));
        }
        if (doc.contains("fixed_points")) {
            c.fixed_points = one_based_list(doc.at("fixed_points"), g, "fixed point");
        }
        if (c.kappa.size() != 1 && c.kappa.size() != c.targets.size()) {
            throw SpecificationError("kappa must be a single value or one per target");
        }
        if (!(c.lambda_scale > 0.0)) {
            throw SpecificationError("lambda_scale must be positive");
        }
        return c;
    } catch (const json::exception& e) {
        throw SpecificationError(std::string("config: ") + e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw SpecificationError("cannot open config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw SpecificationError("config " + path.string() + ": " + e.what());
    }
    return parse_config(doc, path.parent_path());
}

std::vector<double> load_lambda_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw SpecificationError("cannot open lambda file " + path.string());
    }
    try {
        const json doc = json::parse(in);
        if (doc.is_array()) {
            return doc.get<std::vector<double>>();
        }
        return doc.at("lambdas").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw SpecificationError("lambda file " + path.string() + ": " + e.what());
    }
}

ModelSpec RunConfig::model_spec() const
{
    return ModelSpec(factors, terms, targets);
}

CandidateSet RunConfig::candidate_set() const
{
    CandidateSet base = candidates ? CandidateSet{*candidates} : enumerate_full_factorial(factors);
    validate_candidates(base, factors);
    if (!multiplicities.empty()) {
        base = duplicate_columns(base, multiplicities);
    }
    return base;
}

Eigen::VectorXd RunConfig::kappa_vector() const
{
    const auto n = static_cast<Index>(targets.size());
    if (kappa.size() == 1) {
        return Eigen::VectorXd::Constant(n, kappa.front());
    }
    return Eigen::Map<const Eigen::VectorXd>(kappa.data(), static_cast<Index>(kappa.size()));
}

} // namespace oadesign
