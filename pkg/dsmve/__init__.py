# -*- coding: utf-8 -*-

NAME = "dsmve-fbm"
SOURCE_URL = "https://github.com/dsmve-fbm/dsmve-fbm"
VERSION = "2020.10.19"
