#pragma once

// Field of a transient Ca2+ flux treated as a short current element, and the
// sensitivity needed to see it.

#include <string>

namespace remag {

struct CaDomainSpec {
    double ions = 1e5;         // l
    double distance = 200e-9;  // d, m
    double duration = 10e-6;   // t, s
    double standoff = 10e-9;   // r, m
    double repetitions = 1.0;  // N

    void validate() const;
};

/// B = (mu0/4pi) 2 l e d / (t r^2), tesla. Each ion carries charge 2e.
double ca_field(const CaDomainSpec& s);

/// eta = sqrt(2 pi) (mu0/4pi) 2 l e d / (sqrt(t) r^2) sqrt(N), T/sqrt(Hz).
double ca_required_sensitivity(const CaDomainSpec& s);

/// N for which the required sensitivity equals eta_target.
double ca_repetitions_for(const CaDomainSpec& s, double eta_target);

} // namespace remag
