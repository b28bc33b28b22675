#pragma once

#include <complex>
#include <cmath>
#include <cstdint>
#include <limits>
#include <type_traits>

namespace hif {

#ifdef HIF_INDEX64
using Index = std::int64_t;
#else
using Index = std::int32_t;
#endif

template <class T>
struct is_complex : std::false_type {};
template <class R>
struct is_complex<std::complex<R>> : std::true_type {};
template <class T>
inline constexpr bool is_complex_v = is_complex<T>::value;

template <class T>
struct real_of {
  using type = T;
};
template <class R>
struct real_of<std::complex<R>> {
  using type = R;
};
template <class T>
using real_t = typename real_of<T>::type;

template <class T>
concept Scalar = std::is_floating_point_v<real_t<T>> &&
                 (std::is_floating_point_v<T> || is_complex_v<T>);

template <class T>
constexpr T conj(const T& x) {
  if constexpr (is_complex_v<T>)
    return std::conj(x);
  else
    return x;
}

template <class T>
real_t<T> abs(const T& x) {
  return std::abs(x);
}

template <class T>
real_t<T> abs2(const T& x) {
  if constexpr (is_complex_v<T>)
    return std::norm(x);
  else
    return x * x;
}

template <class T>
constexpr real_t<T> epsilon() {
  return std::numeric_limits<real_t<T>>::epsilon();
}

// value conversion across precisions; real -> complex widens, complex -> real
// is rejected at compile time
template <class To, class From>
To scalar_cast(const From& x) {
  if constexpr (is_complex_v<To> && is_complex_v<From>)
    return To(static_cast<real_t<To>>(x.real()),
              static_cast<real_t<To>>(x.imag()));
  else if constexpr (is_complex_v<To>)
    return To(static_cast<real_t<To>>(x), real_t<To>(0));
  else {
    static_assert(!is_complex_v<From>, "cannot narrow complex to real");
    return static_cast<To>(x);
  }
}

// unit-modulus sign; sign(0) = 1
template <class T>
T unit_sign(const T& x) {
  const auto a = abs(x);
  if (a == real_t<T>(0)) return T(1);
  return x / a;
}

}  // namespace hif
