#pragma once

#include <deque>
#include <functional>

#include "shiftgan/tensor.hpp"

namespace shiftgan {
namespace ag {

struct Node {
    Tensor val;
    Tensor grad;                  // allocated by Graph::backward
    bool need_grad = false;
    std::function<void()> back;   // pushes this->grad into parents' grads
};

using Var = Node*;

/// Arena of nodes in creation order. Forward ops run eagerly; backward()
/// replays the tape in reverse, which is a valid topological order for any
/// DAG built through it. One Graph per training iteration.
class Graph {
public:
    Var make(Tensor v, bool need_grad) {
        nodes_.emplace_back();
        Node& n = nodes_.back();
        n.val = std::move(v);
        n.need_grad = need_grad;
        return &n;
    }

    /// Seed d(root)=1 and accumulate gradients through the tape.
    /// root must be a scalar node of this graph.
    void backward(Var root);

    size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    std::deque<Node> nodes_;   // deque: stable addresses
};

} // namespace ag
} // namespace shiftgan
