# -*- coding: utf-8 -*-
"""Configurations of the benchmark cases, one module per case."""
