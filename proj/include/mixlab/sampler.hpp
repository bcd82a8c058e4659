#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mixlab/core.hpp"
#include "mixlab/rng.hpp"

namespace mixlab {

/// One sampled configuration: the out-neighbour multiset of every vertex.
///
/// Edges are stored in compressed rows; row x has exactly d_x^+ entries.
/// Self-loops and repeated heads are kept as sampled.
class Digraph {
public:
    Digraph(std::shared_ptr<const DegreeSequence> seq, std::vector<Vertex> heads,
            std::uint64_t seed, std::uint64_t stream);

    [[nodiscard]] const DegreeSequence& sequence() const noexcept { return *seq_; }
    [[nodiscard]] const std::shared_ptr<const DegreeSequence>& sequence_ptr() const noexcept {
        return seq_;
    }
    [[nodiscard]] std::size_t n() const noexcept { return offsets_.size() - 1; }
    [[nodiscard]] std::uint64_t m() const noexcept { return heads_.size(); }
    [[nodiscard]] std::span<const Vertex> out_edges(Vertex x) const {
        return {heads_.data() + offsets_[x], heads_.data() + offsets_[x + 1]};
    }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

    friend bool operator==(const Digraph& a, const Digraph& b) {
        return *a.seq_ == *b.seq_ && a.heads_ == b.heads_ && a.seed_ == b.seed_ &&
               a.stream_ == b.stream_;
    }

private:
    std::shared_ptr<const DegreeSequence> seq_;
    std::vector<std::uint64_t> offsets_;
    std::vector<Vertex> heads_;
    std::uint64_t seed_;
    std::uint64_t stream_;
};

/// Uniform matching of the m tails to the m heads (Fisher-Yates over head slots).
Digraph sample_dcm(std::shared_ptr<const DegreeSequence> seq, RngStream rng);
/// Each vertex independently picks a uniform d_x^+-subset of [n].
Digraph sample_ocm(std::shared_ptr<const DegreeSequence> seq, RngStream rng);
/// Dispatches on the sequence's model.
Digraph sample_digraph(std::shared_ptr<const DegreeSequence> seq, RngStream rng);

bool is_simple(const Digraph& g);

/// Strongly connected component id per vertex (Tarjan, iterative).
struct SccResult {
    std::vector<std::uint32_t> component;
    std::uint32_t count = 0;
    /// Components with no edge leaving them.
    std::uint32_t closed_count = 0;
};
SccResult strongly_connected_components(const Digraph& g);
bool strongly_connected(const Digraph& g);

std::string digraph_to_json(const Digraph& g);
/// Rebuilds the degree sequence from the stored edge lists.
Digraph digraph_from_json(const std::string& text);

}  // namespace mixlab
