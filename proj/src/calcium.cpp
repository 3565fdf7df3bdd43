#include "remag/calcium.hpp"

#include "remag/constants.hpp"

#include <cmath>
#include <stdexcept>

namespace remag {

void CaDomainSpec::validate() const
{
    auto ok = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!(std::isfinite(ions) && ions >= 0.0))
        throw std::invalid_argument("CaDomainSpec: ion count must be non-negative");
    if (!ok(distance) || !ok(duration) || !ok(standoff) || !ok(repetitions))
        throw std::invalid_argument("CaDomainSpec: d, t, r and N must be positive");
}

double ca_field(const CaDomainSpec& s)
{
    s.validate();
    return mu0_over_4pi * 2.0 * s.ions * elementary_charge * s.distance / (s.duration * s.standoff * s.standoff);
}

double ca_required_sensitivity(const CaDomainSpec& s)
{
    s.validate();
    return std::sqrt(two_pi) * mu0_over_4pi * 2.0 * s.ions * elementary_charge * s.distance /
           (std::sqrt(s.duration) * s.standoff * s.standoff) * std::sqrt(s.repetitions);
}

double ca_repetitions_for(const CaDomainSpec& s, double eta_target)
{
    if (!(eta_target > 0.0))
        throw std::invalid_argument("ca_repetitions_for: target must be positive");
    CaDomainSpec one = s;
    one.repetitions = 1.0;
    const double eta1 = ca_required_sensitivity(one);
    return (eta_target / eta1) * (eta_target / eta1);
}

} // namespace remag
