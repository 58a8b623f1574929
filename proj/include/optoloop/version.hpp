#ifndef OPTOLOOP_VERSION_HPP
#define OPTOLOOP_VERSION_HPP

namespace optoloop {
inline constexpr const char* version = "0.1.0";
}

#endif
