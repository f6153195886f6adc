#pragma once

#include <cstdint>

namespace swtree {

// Counter-based generator: every draw is a pure hash of
// (seed, step, tag, index), so replicas and coupled chains can share
// per-edge / per-vertex randomness and runs replay bitwise.
struct CounterRng {
    uint64_t seed = 0;

    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    uint64_t raw(uint64_t step, uint64_t tag, uint64_t index) const {
        uint64_t z = mix(seed ^ 0x243f6a8885a308d3ULL);
        z = mix(z ^ step);
        z = mix(z ^ (tag * 0x100000001b3ULL));
        z = mix(z ^ index);
        return z;
    }

    // uniform in [0,1)
    double uniform(uint64_t step, uint64_t tag, uint64_t index) const {
        return (raw(step, tag, index) >> 11) * 0x1.0p-53;
    }

    // uniform in {0,...,n-1} (n small; modulo bias negligible at 64 bits
    // but we reject to keep draws exact)
    uint32_t uniform_int(uint64_t step, uint64_t tag, uint64_t index, uint32_t n) const {
        uint64_t x = raw(step, tag, index);
        uint64_t lim = UINT64_MAX - UINT64_MAX % n;
        uint64_t sub = 0;
        while (x >= lim) {
            x = mix(x ^ (++sub));
        }
        return static_cast<uint32_t>(x % n);
    }
};

// Stream tags so distinct purposes never collide on (step,index).
enum RngTag : uint64_t {
    kTagEdge = 1,
    kTagVertexSpin = 2,
    kTagBlockChoice = 3,
    kTagSiteChoice = 4,
    kTagConditional = 5,
    kTagReplica = 6,
    kTagInit = 7,
    kTagFunction = 8,
};

}  // namespace swtree
