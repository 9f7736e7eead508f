#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace snakelab {

// Exact fraction on int64 with __int128 intermediates. Throws on overflow
// after reduction; the oracle's quantities stay far below that.
struct Rat {
  std::int64_t num = 0;
  std::int64_t den = 1;  // always > 0, gcd(num, den) = 1

  Rat() = default;
  Rat(std::int64_t n) : num(n), den(1) {}
  Rat(std::int64_t n, std::int64_t d) { *this = reduce(n, d); }

  static Rat reduce(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("rational: zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 a = n < 0 ? -n : n;
    __int128 g = gcd128(a, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
      throw std::overflow_error("rational: overflow");
    Rat r;
    r.num = static_cast<std::int64_t>(n);
    r.den = static_cast<std::int64_t>(d);
    return r;
  }

  friend Rat operator+(Rat a, Rat b) {
    return reduce(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                  static_cast<__int128>(a.den) * b.den);
  }
  friend Rat operator-(Rat a, Rat b) {
    return reduce(static_cast<__int128>(a.num) * b.den - static_cast<__int128>(b.num) * a.den,
                  static_cast<__int128>(a.den) * b.den);
  }
  friend Rat operator*(Rat a, Rat b) {
    return reduce(static_cast<__int128>(a.num) * b.num, static_cast<__int128>(a.den) * b.den);
  }
  friend Rat operator/(Rat a, Rat b) {
    return reduce(static_cast<__int128>(a.num) * b.den, static_cast<__int128>(a.den) * b.num);
  }
  Rat& operator+=(Rat b) { return *this = *this + b; }
  Rat& operator-=(Rat b) { return *this = *this - b; }
  Rat& operator*=(Rat b) { return *this = *this * b; }
  Rat& operator/=(Rat b) { return *this = *this / b; }

  friend bool operator==(Rat a, Rat b) { return a.num == b.num && a.den == b.den; }
  friend bool operator!=(Rat a, Rat b) { return !(a == b); }
  friend bool operator<(Rat a, Rat b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }

 private:
  static __int128 gcd128(__int128 a, __int128 b) {
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }
};

}  // namespace snakelab
