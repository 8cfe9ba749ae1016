#pragma once

#include <string>
#include <vector>

#include <memory>

#include "maskscope/aggregate.hpp"
#include "maskscope/records.hpp"
#include "maskscope/roi.hpp"
#include "maskscope/synth.hpp"

namespace testing_support {

using namespace maskscope;

inline PostRecord make_post(const std::string& id, const std::string& city, Date day, int faces, int masked,
                            std::vector<std::string> tags = {}, std::uint64_t likes = 0, int hour = 12) {
  PostRecord p;
  p.post_id = id;
  p.city_id = city;
  p.timestamp = Timestamp{day} + std::chrono::hours{hour};
  p.tags = std::move(tags);
  normalize_tags(p.tags);
  p.like_count = likes;
  static const LandmarkSet lm = canonical_landmarks();
  for (int i = 0; i < faces; ++i)
    p.faces.push_back(FaceRecord{lm, i < masked ? MaskLabel::masked : MaskLabel::unmasked, i < masked ? 0.9 : 0.1,
                                 std::nullopt, std::nullopt});
  return p;
}

inline void add_fit(PostRecord& p, std::size_t face, double score) {
  p.faces.at(face).seg_mask = "m.pgm";
  p.faces.at(face).fit_score = FitScore(score);
}

/// Config with UTC cities so local dates equal UTC dates.
inline StudyConfig utc_config() {
  StudyConfig cfg = default_config();
  for (auto& c : cfg.cities) c.utc_offset_minutes = 0;
  return cfg;
}

/// Synthetic corpus aggregated without touching disk.
struct MemoryCorpus {
  std::unique_ptr<StudyConfig> cfg;
  std::unique_ptr<AggregateTable> table;
  SynthResult truth;
  std::uint64_t posts = 0;
};

inline MemoryCorpus synth_in_memory(const SynthParams& params, const StudyConfig& cfg) {
  MemoryCorpus m;
  m.cfg = std::make_unique<StudyConfig>(cfg);
  m.table = std::make_unique<AggregateTable>(m.cfg.get());
  m.truth = generate_corpus(params, *m.cfg, [&](const PostRecord& p) {
    m.table->add(p);
    ++m.posts;
  });
  return m;
}

/// Parameters with every planted effect switched off.
inline CityParams null_city(std::uint64_t posts_per_day) {
  CityParams p;
  p.posts_per_day = posts_per_day;
  p.group_policy_effect = 0.0;
  p.daily_trend = 0.0;
  p.mask_policy_effect = 0.0;
  p.case_coupling = 0.0;
  p.blm_group_delta = 0.0;
  p.blm_mask_delta = 0.0;
  return p;
}

}  // namespace testing_support
