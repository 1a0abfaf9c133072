#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace pie {

/// What a random stream is used for. Streams with different purposes never
/// overlap even when they share a master seed and index.
enum class StreamPurpose : std::uint32_t {
  Data = 1,
  Partition = 2,
  Shard = 3,
  Oracle = 4,
  Resample = 5,
  Test = 6,
};

/// Identifies one independent random stream: (master seed, purpose, index).
struct StreamKey {
  std::uint64_t seed = 0;
  StreamPurpose purpose = StreamPurpose::Shard;
  std::uint32_t index = 0;
};

namespace detail {
/// One Philox4x32-10 block: counter and key in, four 32-bit words out.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;
}  // namespace detail

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit master seed is the Philox key; the upper half of the 128-bit
/// counter holds (purpose, index) and the lower half counts blocks. A stream's
/// output therefore depends only on its key, never on which thread ran it or
/// in what order streams were created.
class PhiloxStream {
 public:
  using result_type = std::uint64_t;

  explicit PhiloxStream(StreamKey key) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Position the stream at an absolute block (two outputs per block).
  void seek(std::uint64_t block) noexcept;

  /// Convenience: uniform double in the open interval (0, 1).
  double uniform_open() noexcept;

  const StreamKey& key() const noexcept { return key_; }

 private:
  void refill() noexcept;

  StreamKey key_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int next_word_ = 4;
};

}  // namespace pie
