"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0
"""

import numpy as np


class RngStream:
    """RngStream is a handle on one counter-based random stream.

    A stream is identified by the master seed plus a path of integer keys. Child streams are derived by
    extending the key path, so the numbers a stream produces depend only on its identity and never on the
    order in which streams are created or consumed. This is what lets replicates run in any schedule.
    """

    def __init__(self, seed, keys=()):
        """
        :param seed: non-negative integer master seed (64-bit in practice)
        :param keys: tuple of non-negative integers identifying the substream
        """
        if seed < 0:
            raise ValueError("seed must be non-negative, got %r" % seed)
        if any(k < 0 for k in keys):
            raise ValueError("stream keys must be non-negative, got %r" % (keys,))
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in keys)

    def child(self, *keys):
        return RngStream(self.seed, self.keys + keys)

    def generator(self):
        """Return a fresh numpy Generator positioned at the start of this stream."""
        seed_seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.keys)
        return np.random.Generator(np.random.Philox(seed_seq))

    def __eq__(self, other):
        return isinstance(other, RngStream) and (self.seed, self.keys) == (other.seed, other.keys)

    def __hash__(self):
        return hash((self.seed, self.keys))

    def __repr__(self):
        return "RngStream(seed=%d, keys=%r)" % (self.seed, self.keys)
