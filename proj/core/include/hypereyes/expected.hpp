#pragma once

#include <stdexcept>
#include <utility>
#include <variant>

namespace hypereyes {

class BadExpectedAccess : public std::logic_error {
 public:
  BadExpectedAccess() : std::logic_error("Expected: accessed value of an error result") {}
};

// Minimal stand-in for C++23 std::expected.
template <typename T, typename E>
class Expected {
 public:
  Expected(T value) : v_(std::in_place_index<0>, std::move(value)) {}  // NOLINT(google-explicit-constructor)
  Expected(E error) : v_(std::in_place_index<1>, std::move(error)) {}  // NOLINT(google-explicit-constructor)

  [[nodiscard]] bool has_value() const noexcept { return v_.index() == 0; }
  explicit operator bool() const noexcept { return has_value(); }

  [[nodiscard]] const T& value() const& {
    if (!has_value()) throw BadExpectedAccess();
    return std::get<0>(v_);
  }
  [[nodiscard]] T& value() & {
    if (!has_value()) throw BadExpectedAccess();
    return std::get<0>(v_);
  }
  [[nodiscard]] T&& value() && {
    if (!has_value()) throw BadExpectedAccess();
    return std::get<0>(std::move(v_));
  }
  [[nodiscard]] const E& error() const& { return std::get<1>(v_); }

  const T& operator*() const& { return value(); }
  T& operator*() & { return value(); }
  const T* operator->() const { return &value(); }
  T* operator->() { return &value(); }

 private:
  std::variant<T, E> v_;
};

}  // namespace hypereyes
