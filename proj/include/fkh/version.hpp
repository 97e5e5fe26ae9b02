#pragma once

namespace fkh {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace fkh
