#pragma once

#include <string>
#include <vector>

namespace photrec {

// A deterministic invariant check against a closed-form or independently
// computed oracle. These run without any configuration and double as a
// smoke test of an installed build.
struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail; // first failing comparison, or a short summary
};

CheckResult check_closed_form_states();
CheckResult check_model_exact_low_support();
CheckResult check_gradient_finite_difference();
CheckResult check_thermal_maxent_oracle();
CheckResult check_constraint_jacobian();
CheckResult check_noiseless_moment_roundtrip();
CheckResult check_povm_roundtrip();
CheckResult check_fidelity_properties();

std::vector<CheckResult> run_selfchecks();

} // namespace photrec
