#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "qkdnet/bits.hpp"
#include "qkdnet/crypto.hpp"
#include "qkdnet/graph.hpp"
#include "qkdnet/keyfabric.hpp"
#include "qkdnet/rng.hpp"

namespace qkdnet::keydist {

struct Shares {
  std::vector<BitString> shares;
  std::vector<crypto::Syndrome> syndromes;  // seeds stay with the source until reveal
};

/// XOR n-of-n split: shares 0..p-2 uniform, share p-1 = S xor the others.
Shares split_shares(const BitString& secret, std::size_t paths, Rng& rng,
                    std::size_t synd_len = crypto::kDefaultSyndromeLen);

struct KeyXor {
  NodeId relay = 0;
  std::uint32_t path = 0;
  std::uint32_t hop = 0;  // position of the relay on the path
  BitString bits;
};

/// K_in xor K_out for the relay at position `hop` of path `path`.
KeyXor relay_kx(NodeId relay, std::uint32_t path, std::uint32_t hop, const BitString& k_in, const BitString& k_out);

/// Source side: share xor K_first xor (all relays' KX), which telescopes to
/// share xor K_last. With no relays this is share xor K_first.
BitString source_combine(const BitString& share, const BitString& k_first, std::span<const BitString> kx);

/// Destination side: strips the last-link pad.
BitString unwrap_share(const BitString& cipher, const BitString& k_last);

struct EndKey {
  NodeId src = 0, dst = 0;
  BitString bits;
};

struct Reconstruction {
  bool success = false;
  std::optional<EndKey> key;
  std::vector<bool> clean;      // per path
  std::vector<NodeId> blamed;   // relays of failed paths, ascending
};

/// Final privacy amplification input: XOR of the clean shares.
BitString combine_clean(std::span<const BitString> shares, const std::vector<bool>& clean);

/// Checks every recovered share (nullopt = never arrived) against its
/// committed checksum. Succeeds iff at least f + 1 paths are clean; the key
/// is then PA over the XOR of the clean shares.
Reconstruction dest_reconstruct(NodeId src, NodeId dst, const std::vector<Path>& paths,
                                std::span<const std::optional<BitString>> recovered,
                                std::span<const crypto::Syndrome> syndromes, std::size_t f,
                                const crypto::PaMatrixSeed& final_seed);

/// Public PA matrix for a scheme; output length share_len - s.
crypto::PaMatrixSeed final_pa_seed(std::uint64_t run_seed, std::uint64_t scheme_id, std::size_t share_len,
                                   std::size_t s);
/// Public seed of the checksum committed for a relay's KX.
BitString kx_synd_seed(std::uint64_t run_seed, const std::string& digest, std::uint32_t scheme, std::uint32_t path,
                       std::uint32_t hop, std::size_t share_len, std::size_t synd_len);

/// Link pads for the hops of committed paths. Each pad is extracted once from
/// the link stream, so both ends of a hop see the same bits and every hop
/// costs exactly share_len bits.
class PadBook {
 public:
  const BitString& pad(KeyFabric& fabric, const std::string& digest, std::uint32_t scheme, std::uint32_t path,
                       std::uint32_t hop, LinkId link, std::size_t len);
  void forget(const std::string& digest);
  std::size_t size() const { return pads_.size(); }

 private:
  std::map<std::tuple<std::string, std::uint32_t, std::uint32_t, std::uint32_t>, BitString> pads_;
};

}  // namespace qkdnet::keydist
