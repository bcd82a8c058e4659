// Batch driver: mixlab --experiment <name> [flags]  (see --help)

#include <iostream>
#include <string>
#include <vector>

#include "mixlab/cli.hpp"

namespace {

void print_usage() {
    std::cout << "usage: mixlab --experiment <name> [--config file.json] [flags]\n\n"
                 "experiments: static-cutoff double-cutoff joint marginal marginal-crosscheck\n"
                 "             annealed weight-lln diagnostics q-estimate\n\n"
                 "common flags:\n"
                 "  --n N                 vertex count\n"
                 "  --degrees GEN         regular:d | mix:d1xk1,d2xk2 | eulerian:d1xk1,... | d1,d2,...\n"
                 "  --in-degrees LIST     in-degrees for an explicit DCM out list\n"
                 "  --degrees-file PATH   JSON {model, out_degrees, in_degrees?}\n"
                 "  --model dcm|ocm\n"
                 "  --alpha A             regeneration probability in (0,1)\n"
                 "  --beta LIST           beta grid (alias --beta-grid)\n"
                 "  --s-grid LIST         switch times (double-cutoff)\n"
                 "  --replicates R        primary environments\n"
                 "  --env-samples E       fresh environments per replicate\n"
                 "  --start-vertices S    all | <sample size> | list:v1,v2,...\n"
                 "  --seed S              root seed (alias --root-seed)\n"
                 "  --threads T|auto      worker count; MIXLAB_THREADS overrides auto\n"
                 "  --output-dir DIR\n"
                 "  --time-scale alpha|entropic, --epsilon, --q-replicates, --tol, --max-iters,\n"
                 "  --op-budget, --t-grid, --traj-samples, --schedule-samples, --switch-time,\n"
                 "  --walk-length, --lln-epsilon\n";
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    for (const auto& a : args) {
        if (a == "--help" || a == "-h") {
            print_usage();
            return 0;
        }
    }
    try {
        const auto spec = mixlab::parse_run_spec(args);
        std::cout << spec.resolved.dump() << "\n";
        const auto outcome = mixlab::run(spec);
        (outcome.exit_code == 0 ? std::cout : std::cerr) << outcome.summary << "\n";
        return outcome.exit_code;
    } catch (const mixlab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
