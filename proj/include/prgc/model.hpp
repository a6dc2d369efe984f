#pragma once

#include <string>
#include <vector>

#include "prgc/decoder.hpp"
#include "prgc/encoder.hpp"

namespace prgc {

/// A trainable extractor: desk encoder plus decoder weights plus the relation
/// vocabulary the decoder's ids refer to.
struct Model {
  DeskEncoder encoder;
  DecoderParams decoder;
  RelationSet relations;

  Model() = default;
  Model(EncoderConfig enc_cfg, Vocab vocab, RelationSet rels, TaggingMode mode, Rng& rng)
      : encoder(enc_cfg, std::move(vocab), rng),
        decoder(enc_cfg.d, rels.size(), mode, rng),
        relations(std::move(rels)) {}

  std::vector<ParamRef> parameters() {
    std::vector<ParamRef> ps = encoder.parameters();
    for (auto& p : decoder.parameters()) ps.push_back(p);
    return ps;
  }
};

} // namespace prgc
