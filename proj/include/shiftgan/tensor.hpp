#pragma once

#include <cassert>
#include <cstddef>
#include <cstdlib>
#include <initializer_list>
#include <new>
#include <numeric>
#include <vector>

namespace shiftgan {

/// 64-byte aligned allocator. All float storage that reaches the Eigen
/// kernels is aligned identically, so repeated runs take identical SIMD
/// paths and stay bitwise reproducible.
template <class T>
struct AlignedAlloc {
    using value_type = T;
    static constexpr size_t kAlign = 64;

    AlignedAlloc() = default;
    template <class U>
    AlignedAlloc(const AlignedAlloc<U>&) {}

    T* allocate(size_t n) {
        if (n == 0) return nullptr;
        size_t bytes = (n * sizeof(T) + kAlign - 1) / kAlign * kAlign;
        void* p = std::aligned_alloc(kAlign, bytes);
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, size_t) noexcept { std::free(p); }

    template <class U>
    bool operator==(const AlignedAlloc<U>&) const {
        return true;
    }
    template <class U>
    bool operator!=(const AlignedAlloc<U>&) const {
        return false;
    }
};

using FloatVec = std::vector<float, AlignedAlloc<float>>;

/// Dense row-major float tensor. Rank is small (scalars up to CHW feature
/// maps); shape {} is not used, scalars are shape {1}.
struct Tensor {
    std::vector<int> shape;
    FloatVec v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        v.assign(numel_of(shape), 0.0f);
    }
    Tensor(std::vector<int> s, FloatVec data) : shape(std::move(s)), v(std::move(data)) {
        assert(v.size() == static_cast<size_t>(numel_of(shape)));
    }
    Tensor(std::vector<int> s, std::initializer_list<float> data)
        : shape(std::move(s)), v(data.begin(), data.end()) {
        assert(v.size() == static_cast<size_t>(numel_of(shape)));
    }

    static Tensor scalar(float x) { return Tensor({1}, {x}); }

    static long numel_of(const std::vector<int>& s) {
        long n = 1;
        for (int d : s) n *= d;
        return n;
    }

    long numel() const { return static_cast<long>(v.size()); }
    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    // CHW accessors (the layout used throughout the network code)
    float& at(int c, int y, int x) {
        assert(shape.size() == 3);
        return v[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    float at(int c, int y, int x) const {
        assert(shape.size() == 3);
        return v[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }

    void fill(float x) { std::fill(v.begin(), v.end(), x); }
    void zero() { fill(0.0f); }
};

} // namespace shiftgan
