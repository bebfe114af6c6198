// Copyright 2026 The mffseg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mffseg/types.hpp"

namespace mffseg {

TaskSpec TaskSpec::binary() { return {TaskKind::Binary, 2, {"Background", "Instrument"}}; }

TaskSpec TaskSpec::parts() { return {TaskKind::Parts, 4, {"Background", "Shaft", "Wrist", "Claspers"}}; }

TaskSpec TaskSpec::instruments() {
    return {TaskKind::Instruments,
            8,
            {"Background", "Bipolar_Forceps", "Prograsp_Forceps", "Large_Needle_Driver", "Vessel_Sealer",
             "Grasping_Retractor", "Monopolar_Curved_Scissors", "Other"}};
}

TaskSpec TaskSpec::from_kind(TaskKind kind) {
    switch (kind) {
        case TaskKind::Binary: return binary();
        case TaskKind::Parts: return parts();
        case TaskKind::Instruments: return instruments();
    }
    return binary();
}

TaskSpec TaskSpec::parse(std::string_view name) {
    if (name == "binary") return binary();
    if (name == "parts") return parts();
    if (name == "instruments") return instruments();
    throw ConfigError("unknown task '" + std::string(name) + "' (expected binary, parts or instruments)");
}

std::string TaskSpec::name() const {
    switch (kind) {
        case TaskKind::Binary: return "binary";
        case TaskKind::Parts: return "parts";
        case TaskKind::Instruments: return "instruments";
    }
    return "binary";
}

void LabelMap::check_range(int num_classes) const {
    for (auto v : indices) {
        MFFSEG_CHECK(v < num_classes, DataError,
                     "label value " + std::to_string(v) + " outside [0, " + std::to_string(num_classes) + ")");
    }
}

}  // namespace mffseg
