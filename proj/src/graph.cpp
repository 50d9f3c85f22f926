#include "shiftgan/graph.hpp"

#include "shiftgan/errors.hpp"

namespace shiftgan {
namespace ag {

void Graph::backward(Var root) {
    require(root != nullptr && root->val.numel() == 1, "backward root must be a scalar");
    if (!root->need_grad) return;   // nothing upstream wants gradients
    for (Node& n : nodes_) {
        if (n.need_grad && n.grad.v.size() != n.val.v.size()) {
            n.grad = Tensor(n.val.shape);
        } else if (n.need_grad) {
            n.grad.zero();
        }
    }
    root->grad.v[0] = 1.0f;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->need_grad && it->back) it->back();
    }
}

} // namespace ag
} // namespace shiftgan
