"""Contrastive input pair mining."""
