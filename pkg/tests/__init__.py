# Tests package for the ZSPO Toolkit
