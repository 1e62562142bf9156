#include "pvb/simgen.hpp"

#include "pvb/error.hpp"
#include "pvb/parallel.hpp"
#include "pvb/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>

namespace pvb::sim {

namespace {

constexpr std::uint64_t kRecordStream = 0x5157ULL;
constexpr int kHermiteNodes = 24;

double logit_of(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

bool in_open_unit(double p) { return p > 0.0 && p < 1.0; }

struct Linear {
    double disease = 0.0;
    double test = 0.0;
    double verify = 0.0;
};

Linear shifts(const SimSpec& spec, const std::vector<double>& x)
{
    Linear s;
    for (std::size_t k = 0; k < spec.covariates.size(); ++k) {
        s.disease += spec.covariates[k].disease_effect * x[k];
        s.test += spec.covariates[k].test_effect * x[k];
        s.verify += spec.covariates[k].verify_effect * x[k];
    }
    return s;
}

double p_disease(const SimSpec& spec, const Linear& s) { return sigmoid(logit_of(spec.prevalence) + s.disease); }

double p_test(const SimSpec& spec, int d, const Linear& s)
{
    return sigmoid((d == 1 ? logit_of(spec.se) : logit_of(1.0 - spec.sp)) + s.test);
}

double p_verify(const SimSpec& spec, int t, int d, const Linear& s)
{
    const auto& v = spec.verification;
    return sigmoid(v.intercept + v.t * t + v.d * d + s.verify);
}

// Standard-normal Gauss-Hermite rule by the Golub-Welsch eigenproblem.
const std::vector<std::pair<double, double>>& hermite_rule()
{
    static const auto rule = [] {
        Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(kHermiteNodes, kHermiteNodes);
        for (int k = 1; k < kHermiteNodes; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
        std::vector<std::pair<double, double>> out;
        for (int k = 0; k < kHermiteNodes; ++k) {
            const double v = eig.eigenvectors()(0, k);
            out.emplace_back(eig.eigenvalues()[k], v * v);
        }
        return out;
    }();
    return rule;
}

// Tensor-product quadrature over the covariate distribution.
template <typename F>
void integrate(const SimSpec& spec, F&& f)
{
    std::vector<double> x(spec.covariates.size());
    auto rec = [&](auto&& self, std::size_t k, double w) -> void {
        if (k == spec.covariates.size()) {
            f(x, w);
            return;
        }
        const auto& c = spec.covariates[k];
        if (c.kind == CovariateKind::Binary) {
            x[k] = 0.0;
            self(self, k + 1, w * (1.0 - c.p));
            x[k] = 1.0;
            self(self, k + 1, w * c.p);
        } else {
            for (const auto& [node, weight] : hermite_rule()) {
                x[k] = c.mean + c.sd * node;
                self(self, k + 1, w * weight);
            }
        }
    };
    rec(rec, 0, 1.0);
}

[[noreturn]] void bad_spec(const std::string& what) { throw Error(ErrorKind::InvalidSpec, what); }

double parse_number(const std::string& key, const std::string& value, int line)
{
    double out = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end)
        bad_spec("line " + std::to_string(line) + ": '" + value + "' is not a number for " + key);
    return out;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

void SimSpec::validate() const
{
    if (n == 0) bad_spec("n must be positive");
    if (!in_open_unit(prevalence)) bad_spec("prevalence must lie in (0, 1)");
    if (!in_open_unit(se)) bad_spec("se must lie in (0, 1)");
    if (!in_open_unit(sp)) bad_spec("sp must lie in (0, 1)");
    for (const auto& c : covariates) {
        if (c.name.empty()) bad_spec("covariate without a name");
        if (c.name == "T" || c.name == "D" || c.name == "V") bad_spec("covariate name '" + c.name + "' is reserved");
        if (c.kind == CovariateKind::Binary && !in_open_unit(c.p))
            bad_spec("covariate " + c.name + ": p must lie in (0, 1)");
        if (c.kind == CovariateKind::Continuous && !(c.sd > 0.0))
            bad_spec("covariate " + c.name + ": sd must be positive");
        if (verification.mechanism == Mechanism::MCAR && c.verify_effect != 0.0)
            bad_spec("MCAR verification cannot depend on covariate " + c.name);
    }
    for (std::size_t i = 0; i < covariates.size(); ++i)
        for (std::size_t j = i + 1; j < covariates.size(); ++j)
            if (covariates[i].name == covariates[j].name) bad_spec("duplicate covariate " + covariates[i].name);
    const auto& v = verification;
    if (v.mechanism == Mechanism::MCAR && (v.t != 0.0 || v.d != 0.0))
        bad_spec("MCAR verification cannot depend on T or D");
    if (v.mechanism == Mechanism::MAR && v.d != 0.0) bad_spec("MAR verification cannot depend on D");
}

SimTruth population_truth(const SimSpec& spec)
{
    spec.validate();
    double diseased = 0.0, true_pos = 0.0, true_neg = 0.0, test_pos = 0.0, verified = 0.0;
    integrate(spec, [&](const std::vector<double>& x, double w) {
        const auto s = shifts(spec, x);
        const double pd = p_disease(spec, s);
        const double t1 = p_test(spec, 1, s);
        const double t0 = p_test(spec, 0, s);
        diseased += w * pd;
        true_pos += w * pd * t1;
        true_neg += w * (1.0 - pd) * (1.0 - t0);
        test_pos += w * (pd * t1 + (1.0 - pd) * t0);
        for (int d : {0, 1}) {
            const double pdd = d == 1 ? pd : 1.0 - pd;
            const double ptd = d == 1 ? t1 : t0;
            verified += w * pdd * (ptd * p_verify(spec, 1, d, s) + (1.0 - ptd) * p_verify(spec, 0, d, s));
        }
    });
    SimTruth truth;
    truth.prevalence = diseased;
    truth.se = true_pos / diseased;
    truth.sp = true_neg / (1.0 - diseased);
    truth.ppv = true_pos / test_pos;
    truth.npv = true_neg / (1.0 - test_pos);
    truth.verified_fraction = verified;
    return truth;
}

double expected_verified_fraction(const SimSpec& spec) { return population_truth(spec).verified_fraction; }

SimResult generate(const SimSpec& spec, unsigned threads)
{
    spec.validate();
    std::vector<Record> records(spec.n);
    std::vector<int> disease(spec.n);
    parallel_for(spec.n, threads, [&](std::size_t i) {
        rng::Stream stream(spec.seed, {kRecordStream, i});
        std::vector<double> x(spec.covariates.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            const auto& c = spec.covariates[k];
            x[k] = c.kind == CovariateKind::Binary ? (stream.bernoulli(c.p) ? 1.0 : 0.0)
                                                   : c.mean + c.sd * stream.normal();
        }
        const auto s = shifts(spec, x);
        const int d = stream.bernoulli(p_disease(spec, s)) ? 1 : 0;
        const int t = stream.bernoulli(p_test(spec, d, s)) ? 1 : 0;
        const bool v = stream.bernoulli(p_verify(spec, t, d, s));
        disease[i] = d;
        records[i].t = t;
        if (v) records[i].d = d;
        records[i].x = std::move(x);
    });
    std::vector<std::string> names;
    for (const auto& c : spec.covariates) names.push_back(c.name);
    return SimResult{Dataset(std::move(records), std::move(names)), population_truth(spec), std::move(disease)};
}

SimSpec parse_spec(std::istream& in)
{
    SimSpec spec;
    std::map<std::string, std::size_t> cov_slot;
    auto covariate = [&](const std::string& name) -> CovariateSpec& {
        auto [it, inserted] = cov_slot.try_emplace(name, spec.covariates.size());
        if (inserted) spec.covariates.push_back(CovariateSpec{.name = name});
        return spec.covariates[it->second];
    };

    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const auto text = trim(raw);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) bad_spec("line " + std::to_string(line) + ": expected key = value");
        const auto key = trim(text.substr(0, eq));
        const auto value = trim(text.substr(eq + 1));
        auto num = [&] { return parse_number(key, value, line); };

        if (key == "n") {
            const double v = num();
            if (v < 1 || v != std::floor(v)) bad_spec("line " + std::to_string(line) + ": n must be a positive integer");
            spec.n = static_cast<std::size_t>(v);
        } else if (key == "prevalence") {
            spec.prevalence = num();
        } else if (key == "se") {
            spec.se = num();
        } else if (key == "sp") {
            spec.sp = num();
        } else if (key == "seed") {
            std::uint64_t seed = 0;
            const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
            if (ec != std::errc() || ptr != value.data() + value.size())
                bad_spec("line " + std::to_string(line) + ": seed must be a non-negative integer");
            spec.seed = seed;
        } else if (key == "mechanism") {
            const auto m = lower(value);
            if (m == "mcar") spec.verification.mechanism = Mechanism::MCAR;
            else if (m == "mar") spec.verification.mechanism = Mechanism::MAR;
            else if (m == "mnar") spec.verification.mechanism = Mechanism::MNAR;
            else bad_spec("line " + std::to_string(line) + ": unknown mechanism '" + value + "'");
        } else if (key == "verify.intercept") {
            spec.verification.intercept = num();
        } else if (key == "verify.t") {
            spec.verification.t = num();
        } else if (key == "verify.d") {
            spec.verification.d = num();
        } else if (key.rfind("covariate.", 0) == 0) {
            const auto rest = key.substr(10);
            const auto dot = rest.rfind('.');
            if (dot == std::string::npos || dot == 0) bad_spec("line " + std::to_string(line) + ": bad key " + key);
            auto& c = covariate(rest.substr(0, dot));
            const auto field = rest.substr(dot + 1);
            if (field == "type") {
                const auto kind = lower(value);
                if (kind == "binary") c.kind = CovariateKind::Binary;
                else if (kind == "continuous") c.kind = CovariateKind::Continuous;
                else bad_spec("line " + std::to_string(line) + ": unknown covariate type '" + value + "'");
            } else if (field == "p") {
                c.p = num();
            } else if (field == "mean") {
                c.mean = num();
            } else if (field == "sd") {
                c.sd = num();
            } else if (field == "disease") {
                c.disease_effect = num();
            } else if (field == "test") {
                c.test_effect = num();
            } else if (field == "verify") {
                c.verify_effect = num();
            } else {
                bad_spec("line " + std::to_string(line) + ": unknown key " + key);
            }
        } else {
            bad_spec("line " + std::to_string(line) + ": unknown key " + key);
        }
    }
    spec.validate();
    return spec;
}

SimSpec load_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MalformedInput, "cannot open " + path.string());
    return parse_spec(in);
}

}  // namespace pvb::sim
