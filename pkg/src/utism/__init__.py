"""Inverse scattering on the line as a special case of the matrix unified transform."""
