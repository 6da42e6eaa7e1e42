"""Position-channel codec and confidence-guided layout recovery.

A patch's index is carried as a K-bit binary code (MSB first, K =
ceil(log2(P)) for P patches) rendered into a patch-sized plane: each bit
is replicated over a contiguous raster block of floor(P_s^2 / K) cells,
trailing cells repeating the last bit.  Decoding averages each block
into a per-bit probability, thresholds at 0.5 (>= maps to 1), and
scores agreement as the confidence c = mean(|p - 0.5|) in [0, 0.5].

Layout recovery resolves duplicate decoded indices greedily by
confidence and parks the losers at the nearest vacant positions, so the
output always fills every position exactly once.
"""

import bisect
from dataclasses import dataclass

import numpy as np

from .tensor_io import WatermarkImage


def code_length(total_positions):
    """Bits needed to address `total_positions` patch indices (min 1)."""
    if total_positions < 1:
        raise ValueError("need at least one position")
    return max(1, int(np.ceil(np.log2(total_positions))))


def index_bits(index, total_positions):
    """MSB-first binary code of a patch index."""
    k = code_length(total_positions)
    if not 0 <= index < total_positions:
        raise ValueError(f"index {index} out of range [0, {total_positions})")
    return np.array([(index >> (k - 1 - j)) & 1 for j in range(k)], dtype=np.uint8)


def _block_slices(patch_size, k):
    """Raster cell ranges of each bit's replication block."""
    cells = patch_size * patch_size
    block = cells // k
    if block < 1:
        raise ValueError(f"patch size {patch_size} too small for {k} bits")
    bounds = [j * block for j in range(k)] + [cells]
    return [(bounds[j], bounds[j + 1]) for j in range(k)]


def encode_position(index, total_positions, patch_size=16):
    """Render a patch index into a patch-sized position plane."""
    bits = index_bits(index, total_positions)
    k = bits.size
    plane = np.empty(patch_size * patch_size, dtype=np.float64)
    for j, (lo, hi) in enumerate(_block_slices(patch_size, k)):
        plane[lo:hi] = float(bits[j])
    return plane.reshape(patch_size, patch_size)


def decode_position(plane, total_positions):
    """Decode a position plane into (prob vector, confidence, index).

    Plane values are clipped to [0, 1] first; the decoded index may
    exceed total_positions - 1 when P < 2^K and the plane is corrupted.
    """
    plane = np.clip(np.asarray(plane, dtype=np.float64), 0.0, 1.0)
    k = code_length(total_positions)
    flat = plane.ravel()
    prob = np.empty(k, dtype=np.float64)
    for j, (lo, hi) in enumerate(_block_slices(plane.shape[0], k)):
        prob[j] = flat[lo:hi].mean()
    bits = prob >= 0.5
    index = 0
    for b in bits:
        index = (index << 1) | int(b)
    confidence = float(np.abs(prob - 0.5).mean())
    return prob, confidence, index


@dataclass(frozen=True)
class DecodedPatch:
    """One extracted patch: content, per-bit probabilities, confidence,
    decoded index, and the (frame, region) slot it came from."""

    content: np.ndarray
    prob: np.ndarray
    confidence: float
    index: int
    slot: tuple


def assign_positions(indices, confidences, total_positions):
    """Resolve decoded indices into a bijection onto [0, P).

    Stage 2: patches claim their decoded index in input order; a
    conflicting claim wins only with strictly higher confidence, and the
    displaced patch joins the unassigned pool (as do claims outside
    [0, P)).  Stage 3: pool patches, sorted by descending confidence,
    each take the vacant position nearest their decoded index (absolute
    index distance, ties to the lower position).

    Returns an array pos[i] = final position of patch i.
    """
    n = len(indices)
    if n != total_positions:
        raise ValueError(f"need exactly {total_positions} patches, got {n}")
    holder = {}
    pool = []
    for i in range(n):
        pos = int(indices[i])
        if not 0 <= pos < total_positions:
            pool.append(i)
            continue
        if pos not in holder:
            holder[pos] = i
        elif confidences[i] > confidences[holder[pos]]:
            pool.append(holder[pos])
            holder[pos] = i
        else:
            pool.append(i)

    final = np.empty(n, dtype=np.int64)
    for pos, i in holder.items():
        final[i] = pos
    vacant = sorted(set(range(total_positions)) - set(holder))
    pool.sort(key=lambda i: -confidences[i])
    for i in pool:
        target = int(indices[i])
        j = bisect.bisect_left(vacant, target)
        if j == 0:
            pick = 0
        elif j == len(vacant):
            pick = j - 1
        else:
            # tie in distance goes to the lower position
            pick = j - 1 if target - vacant[j - 1] <= vacant[j] - target else j
        final[i] = vacant.pop(pick)
    return final


def recover_layout(decoded, total_positions, grid=None):
    """Reassemble a watermark from decoded patches (Algorithm: see module
    docstring).  `grid` is the (rows, cols) patch layout; square inferred
    from P when omitted.  Requires exactly P decoded patches.
    """
    if len(decoded) != total_positions:
        raise ValueError(
            f"need exactly {total_positions} decoded patches, got {len(decoded)}"
        )
    if grid is None:
        side = int(round(np.sqrt(total_positions)))
        if side * side != total_positions:
            raise ValueError("non-square patch count needs an explicit grid")
        grid = (side, side)
    rows, cols = grid
    if rows * cols != total_positions:
        raise ValueError(f"grid {grid} does not hold {total_positions} patches")

    final = assign_positions(
        [d.index for d in decoded], [d.confidence for d in decoded], total_positions
    )
    ps = decoded[0].content.shape[0]
    channels = decoded[0].content.shape[2]
    out = np.zeros((rows * ps, cols * ps, channels), dtype=np.float64)
    for i, d in enumerate(decoded):
        r, c = divmod(int(final[i]), cols)
        out[r * ps:(r + 1) * ps, c * ps:(c + 1) * ps] = d.content
    return WatermarkImage(samples=np.clip(out, 0.0, 1.0))
