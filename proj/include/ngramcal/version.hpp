#pragma once

#define NGRAMCAL_VERSION_MAJOR 0
#define NGRAMCAL_VERSION_MINOR 1
#define NGRAMCAL_VERSION_PATCH 0
#define NGRAMCAL_VERSION "0.1.0"

namespace ngramcal {
inline const char* version() { return NGRAMCAL_VERSION; }
}
