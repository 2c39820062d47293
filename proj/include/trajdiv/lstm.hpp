#pragma once

#include "trajdiv/tape.hpp"

namespace trajdiv::ad {

// Single LSTM cell over batched rows. Gate order in the stacked weight
// matrices is input, forget, cell, output.
struct LstmCell {
  Var wx;  // (in x 4H)
  Var wh;  // (H x 4H)
  Var b;   // (1 x 4H)
  std::size_t hidden = 0;

  struct State {
    Var h;
    Var c;
  };

  static State zero_state(Tape& t, std::size_t batch, std::size_t hidden) {
    return {t.constant(DenseArray::zeros(batch, hidden)),
            t.constant(DenseArray::zeros(batch, hidden))};
  }

  State step(Tape& t, Var x, const State& s) const {
    Var gates = t.add_rowvec(t.add(t.matmul(x, wx), t.matmul(s.h, wh)), b);
    Var gi = t.sigmoid(t.slice_cols(gates, 0, hidden));
    Var gf = t.sigmoid(t.slice_cols(gates, hidden, hidden));
    Var gc = t.tanh(t.slice_cols(gates, 2 * hidden, hidden));
    Var go = t.sigmoid(t.slice_cols(gates, 3 * hidden, hidden));
    Var c = t.add(t.mul(gf, s.c), t.mul(gi, gc));
    Var h = t.mul(go, t.tanh(c));
    return {h, c};
  }
};

}  // namespace trajdiv::ad
