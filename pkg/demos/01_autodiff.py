# coding: utf-8

# # Tape autodiff and gradient checking
#
# Every array in ragat is a `Tensor`. Operations on tensors that need a
# gradient are written to a tape, and `backward` walks that tape once in
# reverse.

# In[1]:

import numpy as np

from ragat import tensor as T
from ragat.gradcheck import grad_check, kink_margin
from ragat.tensor import Tensor


# A tiny least-squares loss: sum((x @ w - y)^2)

# In[2]:

rng = np.random.default_rng(0)
x = Tensor(rng.normal(size=(5, 3)))
y = Tensor(rng.normal(size=(5, 1)))
w = Tensor(rng.normal(size=(3, 1)), requires_grad=True)

def loss():
    r = T.sub(T.matmul(x, w), y)
    return T.reduce("sum", T.mul(r, r))

T.backward(loss())
print("tape gradient    ", w.grad.ravel())
print("closed form 2X'r ", (2 * x.data.T @ (x.data @ w.data - y.data)).ravel())


# The tape is single use. A second backward needs a fresh forward pass.

# In[3]:

out = loss()
T.backward(out)
try:
    T.backward(out)
except Exception as exc:
    print(type(exc).__name__, "-", exc)


# `grad_check` compares the tape against central differences taken in
# extended precision. It returns the worst relative error.

# In[4]:

w.grad = None
print("max relative error:", grad_check(loss, {"w": w}))


# Networks with relu need one more thing: no relu input may sit within eps
# of zero, or the difference quotient straddles the kink.

# In[5]:

h = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
f = lambda: T.reduce("sum", T.relu(T.matmul(h, w)))
print("closest relu input to the kink:", kink_margin(f))
print("max relative error:", grad_check(f, {"h": h, "w": w}))
