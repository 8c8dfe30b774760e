# msjlab package
