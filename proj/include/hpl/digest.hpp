#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>

namespace hpl {

/// FNV-1a over a canonical text rendering of configuration fields
/// (doubles printed with %.17g), used to tag outputs with their config.
class Digest
{
  public:
    Digest& add(std::string_view s)
    {
        for (unsigned char c : s) {
            state_ = (state_ ^ c) * 0x100000001b3ull;
        }
        return separator();
    }
    Digest& add(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return add(std::string_view(buf));
    }
    Digest& add(int v) { return add(static_cast<double>(v)); }
    Digest& add(std::span<double const> values)
    {
        for (double v : values) {
            add(v);
        }
        return separator();
    }
    std::string hex() const
    {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
        return buf;
    }

  private:
    Digest& separator()
    {
        state_ = (state_ ^ 0x1fu) * 0x100000001b3ull;
        return *this;
    }

    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

}  // namespace hpl
