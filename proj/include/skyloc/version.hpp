#pragma once

#define SKYLOC_VERSION_STRING "0.1.0"

namespace skyloc {

inline const char* version() { return SKYLOC_VERSION_STRING; }

}  // namespace skyloc
