"""Pure numpy implementations of the hot kernels.

Used when the compiled extension is unavailable, or when
``MDLAB_PURE_PYTHON=1`` is set.
"""

import numpy as np

_CHUNK_CELLS = 1 << 22


def nearest_codewords(words, codebook):
    """Nearest codeword for each word by exhaustive Hamming search.

    Parameters
    ----------
    words : uint64 array
        Packed n-bit words.
    codebook : uint64 array
        Packed codewords, position = message index.

    Returns
    -------
    idx, dist : int64 arrays
        Index of the closest codeword (smallest index on ties) and its
        Hamming distance.
    """
    words = np.ascontiguousarray(words, dtype=np.uint64)
    codebook = np.ascontiguousarray(codebook, dtype=np.uint64)
    idx = np.empty(words.size, dtype=np.int64)
    dist = np.empty(words.size, dtype=np.int64)
    step = max(1, _CHUNK_CELLS // max(codebook.size, 1))
    for lo in range(0, words.size, step):
        block = np.bitwise_count(words[lo:lo + step, None] ^ codebook[None, :])
        arg = np.argmin(block, axis=1)
        idx[lo:lo + step] = arg
        dist[lo:lo + step] = block[np.arange(arg.size), arg]
    return idx, dist


def coset_min_weights(gens, nkeys):
    """Minimum Hamming weight of every coset, by breadth-first search.

    ``gens[i]`` is the coset key of the i-th unit vector; key 0 is the code
    itself. Returns an int64 array of length ``nkeys``.
    """
    gens = np.unique(np.asarray(gens, dtype=np.uint64))
    minw = np.full(nkeys, -1, dtype=np.int64)
    minw[0] = 0
    frontier = np.zeros(1, dtype=np.uint64)
    level = 0
    while frontier.size:
        level += 1
        nxt = np.unique((frontier[:, None] ^ gens[None, :]).ravel())
        nxt = nxt[minw[nxt] < 0]
        minw[nxt] = level
        frontier = nxt
    return minw
