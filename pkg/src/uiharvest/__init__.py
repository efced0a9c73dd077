"""uiharvest: crawl web UIs, store captures, and build modeling datasets."""

__version__ = "0.1.0"
