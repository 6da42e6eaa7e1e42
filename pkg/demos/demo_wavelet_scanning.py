"""Walk through the wavelet transforms, mosaic layout, and scan orders
on tensors small enough to read by eye.

Run: python3 demos/demo_wavelet_scanning.py
"""

import numpy as np

from vidmark import wavelet, scanning

np.set_printoptions(precision=3, suppress=True)

print("=== 2D Haar on a 4x4 gradient ===")
plane = np.linspace(0, 1, 16).reshape(4, 4, 1)
print("input:\n", plane[:, :, 0])
bands = wavelet.dwt2(plane)
for name in wavelet.BAND_ORDER_2D:
    print(f"{name.upper()}:\n", getattr(bands, name)[:, :, 0])
back = wavelet.idwt2(bands)
print("max reconstruction error:", np.max(np.abs(back - plane)))

print("\n=== mosaic layout: subbands tiled back to full resolution ===")
mosaic = wavelet.mosaic2_forward(bands)
print(mosaic[:, :, 0])
print("(LL upper-left, LH upper-right, HL lower-left, HH lower-right)")

print("\n=== energy is preserved (orthonormal filters) ===")
total = sum(np.sum(getattr(bands, n) ** 2) for n in wavelet.BAND_ORDER_2D)
print(f"input energy {np.sum(plane ** 2):.6f}  subband energy {total:.6f}")

print("\n=== 3D transform of a 2x4x4 volume ===")
vol = np.stack([plane, 1 - plane])
bands3 = wavelet.dwt3(vol)
for name in wavelet.BAND_ORDER_3D:
    energy = float(np.sum(getattr(bands3, name) ** 2))
    print(f"{name.upper()} energy: {energy:.4f}")
print("reconstruction error:", np.max(np.abs(wavelet.idwt3(bands3) - vol)))

print("\n=== scan orders over the 2x2x2 mosaic ===")
forward = scanning.scan_3d_local(2, 2, 2, "forward")
reverse = scanning.scan_3d_local(2, 2, 2, "reverse")
print("forward (low->high frequency):", forward.forward.tolist())
print("reverse:                      ", reverse.forward.tolist())
print("vanilla raster:               ",
      scanning.scan_3d_vanilla(2, 2, 2).forward.tolist())

print("\n=== gather/scatter round trip is exact ===")
x = np.arange(8.0)
gathered = scanning.apply_order(x, forward, "gather")
restored = scanning.apply_order(gathered, forward, "scatter")
print("gathered:", gathered.tolist())
print("restored:", restored.tolist())
