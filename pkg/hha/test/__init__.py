# SPDX-License-Identifier: MIT
#
