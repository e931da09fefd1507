// Copyright (c) 2026 icodiff contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "icodiff/cli/toml.hpp"
#include "icodiff/train/trainer.hpp"

namespace icodiff {

// Field-for-field TOML mirror of TrainConfig: scalar fields at top level,
// architecture under [model]. Derived fields (patch geometry, the model's
// schedule-length copy) are omitted - they are recomputed from the data.
TomlTable train_config_to_toml(const TrainConfig& cfg);

// Applies `table` on top of `base`. Unknown keys throw ParseError so typos
// fail loudly instead of silently training with defaults.
TrainConfig train_config_from_toml(const TomlTable& table,
                                   const TrainConfig& base = {});

}  // namespace icodiff
