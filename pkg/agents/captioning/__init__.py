"""真值描述生成：几何换算、视场过滤与两种描述格式"""
