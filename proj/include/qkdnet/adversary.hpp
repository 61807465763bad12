#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qkdnet/auth.hpp"
#include "qkdnet/keyfabric.hpp"
#include "qkdnet/simulation.hpp"

namespace qkdnet::adversary {

// ---- closed-form bounds (values in bits) ----

struct SubstitutionBound {
  double general = 0;   // log2(2^(m+fk-n) + 2^m eps_pa)
  double toeplitz = 0;  // 2^-s / ln 2 with s = n - fk - m
  long s = 0;
};
SubstitutionBound bound_substitution(long m, long f, long k, long n, double eps_pa);
/// 2^(m + floor(f/2) k + k - n) / ln 2.
double bound_nonrepudiation(long m, long f, long k, long n);

struct BoundReport {
  double i_ke_bound = 0;
  double i_ab_bound = 0;
  std::size_t k_min_imperson = 0;  // ceil(-log2(eps_au) / (C - f))
  long m = 0, f = 0, k = 0, n = 0, C = 0;
  double eps_pa = 0, eps_au = 0;
};
BoundReport bound_report(long m, long f, long k, long n, long C, double eps_pa, double eps_au);

// ---- coalition knowledge ----

class AccessViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Everything the coalition may read: link streams of links touching a
/// member. Any other read throws and is counted.
class CoalitionView {
 public:
  CoalitionView(const KeyFabric& fabric, std::set<NodeId> members);
  const std::set<NodeId>& members() const { return members_; }
  bool knows(LinkId id) const;
  BitString link_bits(LinkId id, std::uint64_t offset, std::size_t len);
  std::size_t reads() const { return reads_; }
  std::size_t denied() const { return denied_; }

 private:
  const KeyFabric& fabric_;
  std::set<NodeId> members_;
  std::size_t reads_ = 0;
  std::size_t denied_ = 0;
};

struct AttackReport {
  std::string attack;
  nlohmann::ordered_json params;
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  double bound = 0;
  bool verdict = false;  // true when the measured outcome respects the bound / property
  nlohmann::ordered_json to_json() const;
};

// ---- substitution: predict an honest node's key before disclosure ----

struct SubstitutionParams {
  std::size_t f = 1;
  std::size_t C = 2;  // degree of the target; C - f of its links are honest
  std::size_t k = 8;
  unsigned omega = 16;
  unsigned tag_len = 16;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
};
/// The coalition owns f of the target's C links, guesses the rest of its raw
/// key, derives the key under the public PA matrix and tags a forged payload.
/// Success means the forgery verifies against the target's real disclosure.
/// The bound is the guessing probability 2^-((C-f)k) and the verdict checks
/// rate <= bound + 3 sigma.
AttackReport attack_substitution(const SubstitutionParams& p);

// ---- fake area ----

struct FakeAreaResult {
  bool accepted = false;  // observer's verdicts on the fake identities equal those on the genuine ones
  bool rejected = false;  // genuine area trusted, every fake identity untrusted
  std::map<NodeId, bool> genuine_trust, fake_trust;
};
/// The coalition replaces the disclosures of `fake` with self-consistent
/// fabricated ones: links among fake identities and to coalition members
/// agree, links to other honest nodes are guessed.
FakeAreaResult attack_fake_area(const Graph& topology, const std::set<NodeId>& coalition,
                                const std::set<NodeId>& fake, NodeId observer, std::size_t f, std::size_t k,
                                std::uint64_t seed);

/// The reconstructed two-area example: green K4 {0..3}, red K4 {4..7}, two
/// coalition bridges 8 and 9 adjacent to both, optional link 2-6.
Graph two_area_topology(bool bridge);

// ---- consensus-level behaviours ----

struct EquivocationOutcome {
  std::size_t equivocated_views = 0;
  std::size_t deposed_in_view = 0;  // every honest node advanced on f+1 view changes
  std::size_t honest_commits_in_equivocated = 0;
  std::size_t conflicting_views = 0;
  // Equivocated views opened less than a view-change timeout before the run
  // ended; they count toward commits and conflicts but not deposition.
  std::size_t unsettled = 0;
  std::vector<std::string> violations;
};
EquivocationOutcome attack_equivocate(sim::SimConfig cfg);
EquivocationOutcome summarize_equivocation(const sim::SimResult& res);

struct WrongKxOutcome {
  std::size_t schemes = 0;
  std::size_t failed_safely = 0;
  std::size_t succeeded = 0;
  std::size_t blamed_coalition = 0;
  std::size_t divergent = 0;
  std::vector<std::string> violations;
};
WrongKxOutcome attack_wrong_kx(sim::SimConfig cfg);

// ---- leader fairness ----

struct FairnessResult {
  std::vector<std::uint64_t> counts;
  double chi2 = 0;
  double threshold = 0;  // 99% quantile, N - 1 degrees of freedom
  bool pass = false;
};
/// Leaders of `views` consecutive views elected from QKD raw keys, with the
/// coalition's f voters contributing keys fixed before the run.
FairnessResult leader_fairness(std::size_t N, std::size_t f, std::uint64_t views, std::uint64_t seed);

// ---- secrecy by exhaustive enumeration ----

struct SecrecyResult {
  std::vector<Path> paths;
  std::set<NodeId> coalition;
  std::uint64_t configs = 0;
  double mi_bits = 0;
  bool independent = false;  // P(obs | S) identical for every S, checked on integer counts
};
/// 4-bit secret and shares, 4-bit pad on every hop. The coalition observes
/// the pads of links touching it, every KX and every path ciphertext. With
/// `with_syndromes` it also sees a 1-bit Toeplitz checksum of each share.
SecrecyResult secrecy_enumeration(const std::vector<Path>& paths, const std::set<NodeId>& coalition,
                                  bool with_syndromes = false);
/// Random samples of the enumerator's public view recomputed with the
/// library's relay_kx, source_combine and make_syndrome. True if all agree.
bool secrecy_crosscheck(const std::vector<Path>& paths, std::size_t samples, std::uint64_t seed);

}  // namespace qkdnet::adversary
