#pragma once

namespace rotaprop {

inline constexpr const char* artifact_version = "0.1.0";
inline constexpr int config_schema_version = 1;

}  // namespace rotaprop
