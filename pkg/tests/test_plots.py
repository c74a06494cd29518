import numpy as np

from sysnoise.plots import accuracy_heatmap, diff_histogram, image_grid
from sysnoise.report import AccuracyTable, pixel_diff_stats

PNG = b"\x89PNG\r\n\x1a\n"


class TestPlots:
    def test_heatmap(self, tmp_path):
        t = AccuracyTable(["a", "b"], ["x", "y", "z"], [[90.0, 91.0, 92.0], [88.0, 88.0, 89.5]], excluded=["z"])
        accuracy_heatmap(t, tmp_path / "h.png", title="t")
        assert (tmp_path / "h.png").read_bytes()[:8] == PNG

    def test_histogram(self, tmp_path, rng):
        a = rng.integers(0, 256, (8, 8, 3), dtype=np.uint8)
        b = np.clip(a.astype(int) + rng.integers(-2, 3, a.shape), 0, 255).astype(np.uint8)
        diff_histogram(pixel_diff_stats(a, b), tmp_path / "d.png")
        assert (tmp_path / "d.png").read_bytes()[:8] == PNG

    def test_histogram_of_identical(self, tmp_path):
        a = np.zeros((2, 2), np.uint8)
        diff_histogram(pixel_diff_stats(a, a), tmp_path / "z.png")
        assert (tmp_path / "z.png").stat().st_size > 0

    def test_grid_pdf(self, tmp_path):
        imgs = [np.zeros((3, 3, 3), np.uint8), np.full((3, 3), 255, np.uint8)]
        image_grid(imgs, ["black", "white"], tmp_path / "g.pdf", scale=8)
        assert (tmp_path / "g.pdf").read_bytes()[:4] == b"%PDF"
