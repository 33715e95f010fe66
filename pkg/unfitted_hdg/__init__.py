# -*- coding: utf-8 -*-
"""High-order unfitted HDG solver for one- and two-fluid Stokes flow on NURBS geometries."""
