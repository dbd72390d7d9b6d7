#ifndef IMMFIT_INLINE_VEC_HPP
#define IMMFIT_INLINE_VEC_HPP

#include <array>
#include <cstddef>

#include "immfit/errors.hpp"

namespace immfit {

// Fixed-capacity vector with inline storage. The filter recursion creates
// per-mode containers every step; keeping them off the heap matters for the
// training loop's throughput.
template <class T, int Cap>
class InlineVec {
public:
    InlineVec() = default;

    InlineVec(std::initializer_list<T> init) {
        for (const T& v : init) push_back(v);
    }

    static InlineVec filled(int n, const T& v) {
        InlineVec r;
        for (int i = 0; i < n; ++i) r.push_back(v);
        return r;
    }

    void push_back(const T& v) {
        if (size_ >= Cap) throw ShapeError("InlineVec capacity exceeded");
        items_[static_cast<std::size_t>(size_++)] = v;
    }

    T& operator[](int i) { return items_[static_cast<std::size_t>(i)]; }
    const T& operator[](int i) const { return items_[static_cast<std::size_t>(i)]; }

    int size() const { return size_; }
    bool empty() const { return size_ == 0; }

    T* begin() { return items_.data(); }
    T* end() { return items_.data() + size_; }
    const T* begin() const { return items_.data(); }
    const T* end() const { return items_.data() + size_; }

private:
    std::array<T, Cap> items_{};
    int size_ = 0;
};

}  // namespace immfit

#endif  // IMMFIT_INLINE_VEC_HPP
