// Copyright 2026  ttaudio authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef TTA_ERRORS_HPP
#define TTA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tta {

// One exception type per contract violation so callers (and tests) can
// distinguish failure modes without parsing messages.
#define TTA_DEFINE_ERROR(NAME)                                   \
  struct NAME : std::runtime_error {                             \
    explicit NAME(const std::string& what_arg)                   \
        : std::runtime_error(std::string(#NAME ": ") + what_arg) {} \
  }

// corruption
TTA_DEFINE_ERROR(LengthMismatch);
TTA_DEFINE_ERROR(ZeroEnergyNoise);
TTA_DEFINE_ERROR(ZeroEnergySignal);
TTA_DEFINE_ERROR(ClipTooLong);
TTA_DEFINE_ERROR(LambdaOutOfRange);
TTA_DEFINE_ERROR(UnknownNoiseSource);

// features
TTA_DEFINE_ERROR(TooShort);

// models
TTA_DEFINE_ERROR(HeadUnavailable);
TTA_DEFINE_ERROR(LabelOutOfRange);
TTA_DEFINE_ERROR(DivergedLoss);
TTA_DEFINE_ERROR(CheckpointMissing);
TTA_DEFINE_ERROR(CheckpointConfigMismatch);

// online adapters
TTA_DEFINE_ERROR(NoBNLayers);
TTA_DEFINE_ERROR(BatchTooSmall);

// conmix
TTA_DEFINE_ERROR(WeightLengthMismatch);
TTA_DEFINE_ERROR(AllLossesDisabled);
TTA_DEFINE_ERROR(FewerThanTwoDomains);
TTA_DEFINE_ERROR(TeacherMissing);
TTA_DEFINE_ERROR(UnknownVariant);

// harness
TTA_DEFINE_ERROR(MissingDataset);
TTA_DEFINE_ERROR(LabelVocabularyMismatch);
TTA_DEFINE_ERROR(IncompleteGrid);

// io
TTA_DEFINE_ERROR(WavFormatError);

#undef TTA_DEFINE_ERROR

}  // namespace tta

#endif  // TTA_ERRORS_HPP
