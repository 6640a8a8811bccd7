"""Porosity-sensitivity estimation of linear-elastic quantities on 2D parts."""
