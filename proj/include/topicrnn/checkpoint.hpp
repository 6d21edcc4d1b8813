#ifndef TOPICRNN_CHECKPOINT_HPP
#define TOPICRNN_CHECKPOINT_HPP

#include <cstdint>
#include <memory>
#include <string>

#include "topicrnn/model.hpp"

namespace topicrnn {
namespace checkpoint {

// Binary layout, little-endian throughout:
//   magic "TRNN" | u32 version | u32 json_len | config JSON (UTF-8)
//   | u32 tensor_count | per tensor: u32 name_len, name, u32 rank,
//     u32 dims[rank], f32 data (row-major)
// The config JSON embeds the vocabulary (tokens, stop flags, special ids)
// and its hash, so evaluation never re-derives the vocabulary.
constexpr uint32_t kVersion = 1;

void save(const TopicRnnModel& model, const std::string& path);
std::unique_ptr<TopicRnnModel> load(const std::string& path);

}  // namespace checkpoint
}  // namespace topicrnn

#endif  // TOPICRNN_CHECKPOINT_HPP
