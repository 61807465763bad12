#include "qkdnet/keydist.hpp"

#include <set>

#include "qkdnet/errors.hpp"

namespace qkdnet::keydist {

namespace {
constexpr std::uint64_t kFinalLabel = 0x46494e41;  // "FINA"
constexpr std::uint64_t kKxLabel = 0x4b585344;     // "KXSD"

std::uint64_t digest_word(const std::string& d) {
  std::uint64_t w = 0;
  for (std::size_t i = 0; i < 8 && i < d.size(); ++i) w = (w << 8) | static_cast<std::uint8_t>(d[i]);
  return w;
}
}  // namespace

Shares split_shares(const BitString& secret, std::size_t paths, Rng& rng, std::size_t synd_len) {
  if (paths == 0) throw ParameterError("split_shares: need at least one path");
  if (secret.empty()) throw ParameterError("split_shares: empty secret");
  Shares out;
  BitString last = secret;
  for (std::size_t i = 0; i + 1 < paths; ++i) {
    out.shares.push_back(rng.bits(secret.size()));
    last ^= out.shares.back();
  }
  out.shares.push_back(std::move(last));
  const std::size_t len = std::min(synd_len, secret.size());
  for (const auto& sh : out.shares) {
    out.syndromes.push_back(crypto::make_syndrome(sh, rng.bits(sh.size() + len - 1), len));
  }
  return out;
}

KeyXor relay_kx(NodeId relay, std::uint32_t path, std::uint32_t hop, const BitString& k_in, const BitString& k_out) {
  return KeyXor{relay, path, hop, crypto::xor_bits(k_in, k_out)};
}

BitString source_combine(const BitString& share, const BitString& k_first, std::span<const BitString> kx) {
  BitString c = crypto::xor_bits(share, k_first);
  for (const auto& x : kx) c ^= x;
  return c;
}

BitString unwrap_share(const BitString& cipher, const BitString& k_last) { return crypto::xor_bits(cipher, k_last); }

BitString combine_clean(std::span<const BitString> shares, const std::vector<bool>& clean) {
  if (shares.empty() || clean.size() != shares.size()) throw ParameterError("combine_clean: size mismatch");
  BitString s(shares.front().size());
  for (std::size_t i = 0; i < shares.size(); ++i) {
    if (clean[i]) s ^= shares[i];
  }
  return s;
}

Reconstruction dest_reconstruct(NodeId src, NodeId dst, const std::vector<Path>& paths,
                                std::span<const std::optional<BitString>> recovered,
                                std::span<const crypto::Syndrome> syndromes, std::size_t f,
                                const crypto::PaMatrixSeed& final_seed) {
  if (recovered.size() != paths.size() || syndromes.size() != paths.size()) {
    throw ParameterError("dest_reconstruct: per-path inputs do not match");
  }
  Reconstruction out;
  out.clean.assign(paths.size(), false);
  std::set<NodeId> blamed;
  std::vector<BitString> shares(paths.size());
  std::size_t good = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (recovered[i] && crypto::check_syndrome(*recovered[i], syndromes[i])) {
      out.clean[i] = true;
      shares[i] = *recovered[i];
      ++good;
    } else {
      for (std::size_t j = 1; j + 1 < paths[i].size(); ++j) blamed.insert(paths[i][j]);
      shares[i] = BitString(final_seed.n);
    }
  }
  out.blamed.assign(blamed.begin(), blamed.end());
  if (good >= f + 1) {
    out.success = true;
    out.key = EndKey{src, dst, crypto::pa_compress(combine_clean(shares, out.clean), final_seed)};
  }
  return out;
}

crypto::PaMatrixSeed final_pa_seed(std::uint64_t run_seed, std::uint64_t scheme_id, std::size_t share_len,
                                   std::size_t s) {
  if (s >= share_len) throw ParameterError("final_pa_seed: margin must be below the share length");
  const std::size_t m = share_len - s;
  Rng rng(derive_seed(run_seed, {kFinalLabel, scheme_id}));
  return crypto::make_pa_seed(rng.bits(share_len + m - 1), share_len, m);
}

BitString kx_synd_seed(std::uint64_t run_seed, const std::string& digest, std::uint32_t scheme, std::uint32_t path,
                       std::uint32_t hop, std::size_t share_len, std::size_t synd_len) {
  Rng rng(derive_seed(run_seed, {kKxLabel, digest_word(digest), scheme, path, hop}));
  return rng.bits(share_len + synd_len - 1);
}

const BitString& PadBook::pad(KeyFabric& fabric, const std::string& digest, std::uint32_t scheme, std::uint32_t path,
                              std::uint32_t hop, LinkId link, std::size_t len) {
  auto key = std::make_tuple(digest, scheme, path, hop);
  auto it = pads_.find(key);
  if (it != pads_.end()) return it->second;
  return pads_.emplace(std::move(key), fabric.extract_key(link, len, Category::keydist)).first->second;
}

void PadBook::forget(const std::string& digest) {
  auto lo = pads_.lower_bound(std::make_tuple(digest, 0u, 0u, 0u));
  auto it = lo;
  while (it != pads_.end() && std::get<0>(it->first) == digest) ++it;
  pads_.erase(lo, it);
}

}  // namespace qkdnet::keydist
